//! Off-resonant drive: the oscillation speeds up to the generalized Rabi
//! frequency while its contrast falls.

use nv_optics::bloch::{rabi_amplitude_factor, rabi_generalized};
use nv_optics::experiments::{run_detuning_sweep, ExperimentConfig};
use nv_optics::units::{mhz_to_rad_per_ns, rad_per_ns_to_mhz};

fn main() -> nv_optics::Result<()> {
    let cfg = ExperimentConfig::default();
    let omega0 = cfg.omega0()?;
    let deltas: Vec<f64> = [0.0, 100.0, 200.0, 300.0].map(mhz_to_rad_per_ns).to_vec();
    let rows = run_detuning_sweep(&cfg, &deltas)?;

    println!(
        "{:>9} {:>11} {:>11} {:>9} {:>9}",
        "delta", "fit_MHz", "theory_MHz", "contrast", "theory"
    );
    let resonant = rows[0].fit.as_ref().map(|f| f.amplitude_at_zero()).unwrap_or(f64::NAN);
    for row in &rows {
        let Ok(fit) = &row.fit else { continue };
        println!(
            "{:9.0} {:11.1} {:11.1} {:9.3} {:9.3}",
            rad_per_ns_to_mhz(row.delta),
            rad_per_ns_to_mhz(fit.omega),
            rad_per_ns_to_mhz(rabi_generalized(omega0, row.delta)),
            fit.amplitude_at_zero() / resonant,
            rabi_amplitude_factor(omega0, row.delta)?,
        );
    }
    Ok(())
}
