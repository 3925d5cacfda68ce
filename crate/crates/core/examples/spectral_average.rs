//! Averaging over repump-induced spectral jumps barely changes the transient
//! when the drive is much faster than the jump width.

use nv_optics::experiments::{run_spectral_average, ExperimentConfig};
use nv_optics::units::rad_per_ns_to_mhz;

fn main() -> nv_optics::Result<()> {
    let cfg = ExperimentConfig::default();
    let r = run_spectral_average(&cfg)?;
    for (name, fit) in [("jumping line", &r.averaged_fit), ("frozen line", &r.single_fit)] {
        let f = fit.as_ref().map_err(|e| nv_optics::Error::FitFailed(e.to_string()))?;
        println!(
            "{name:>13}: Omega = {:7.2} MHz, tau = {:.3} ns",
            rad_per_ns_to_mhz(f.omega),
            f.tau
        );
    }
    let worst = r
        .averaged
        .counts
        .iter()
        .zip(&r.single.counts)
        .map(|(a, b)| (a - b).abs() / b.max(1e-12))
        .fold(0.0, f64::max);
    println!("largest relative bin difference: {:.2} %", 100.0 * worst);
    Ok(())
}
