//! Damping constant of the oscillation against Rabi frequency. Well above
//! the linewidth it settles at the closed-form value; at low Rabi frequency
//! the decay is slower.

use nv_optics::bloch::predicted_damping;
use nv_optics::experiments::{run_damping_sweep, ExperimentConfig};
use nv_optics::units::{mhz_to_rad_per_ns, rad_per_ns_to_mhz};

fn main() -> nv_optics::Result<()> {
    let cfg = ExperimentConfig::default();
    let omegas: Vec<f64> = [60.0, 100.0, 200.0, 400.0].map(mhz_to_rad_per_ns).to_vec();
    println!("closed form tau = {:.3} ns", predicted_damping(&cfg.emitter)?);
    for p in run_damping_sweep(&cfg, &omegas)? {
        match p.fit {
            Ok(f) => println!(
                "{:5.0} MHz  drive {:5.1} ns  tau = {:.3} ± {:.3} ns",
                rad_per_ns_to_mhz(p.omega),
                p.drive_duration,
                f.tau,
                f.stderr[1]
            ),
            Err(e) => println!("{:5.0} MHz  {e}", rad_per_ns_to_mhz(p.omega)),
        }
    }
    Ok(())
}
