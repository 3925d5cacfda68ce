//! Rabi frequency against drive power, and the square-root law through the
//! origin.

use nv_optics::experiments::{run_power_sweep, ExperimentConfig};
use nv_optics::units::rad_per_ns_to_mhz;

fn main() -> nv_optics::Result<()> {
    let cfg = ExperimentConfig::default();
    let sweep = run_power_sweep(&cfg, &[2.0, 4.7, 10.0, 19.0, 38.0])?;
    println!("{:>8} {:>12}", "P_uW", "Omega_MHz");
    for (p, fit) in &sweep.points {
        match fit {
            Ok(f) => println!("{p:8.1} {:12.2}", rad_per_ns_to_mhz(f.omega)),
            Err(e) => println!("{p:8.1} {e}"),
        }
    }
    let law = sweep.sqrt_law?;
    println!(
        "kappa = {:.2} ± {:.2} MHz/sqrt(uW), R^2 = {:.5}{}",
        rad_per_ns_to_mhz(law.slope),
        rad_per_ns_to_mhz(law.slope_stderr),
        law.r_squared,
        if law.flagged { " (flagged)" } else { "" }
    );
    Ok(())
}
