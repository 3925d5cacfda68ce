//! Time-resolved fluorescence during resonant drive pulses, with the
//! damped-cosine fit. Pass `poisson` to add shot noise.
//!
//!     cargo run --release --example rabi_oscillations [poisson]

use nv_optics::analysis::{fit_damped_cosine, Weighting};
use nv_optics::experiments::{run_rabi, ExperimentConfig, Sampling};
use nv_optics::units::rad_per_ns_to_mhz;

fn main() -> nv_optics::Result<()> {
    let mut cfg = ExperimentConfig::default();
    if std::env::args().any(|a| a == "poisson") {
        cfg.run.sampling = Sampling::Poisson;
        // ~10 counts per bin: enough for a clean fit.
        cfg.n_cycles = 20_000;
    }
    let hist = run_rabi(&cfg)?;
    let fit = fit_damped_cosine(&hist, cfg.fit_window()?, Weighting::Poisson)?;

    for (t, c) in hist
        .bin_centers()
        .iter()
        .zip(&hist.counts)
        .step_by(2)
        .take_while(|(t, _)| **t < 35.0)
    {
        let bar = "#".repeat((60.0 * c / hist.counts.iter().copied().fold(1e-300, f64::max)) as usize);
        println!("{t:7.2} ns {c:10.1} {bar}");
    }
    println!(
        "Omega = {:.1} ± {:.1} MHz   tau = {:.2} ± {:.2} ns",
        rad_per_ns_to_mhz(fit.omega),
        rad_per_ns_to_mhz(fit.stderr[0]),
        fit.tau,
        fit.stderr[1]
    );
    Ok(())
}
