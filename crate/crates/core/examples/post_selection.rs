//! Post-selection on probe counts.
//!
//! A weak probe after every repump counts photons; cycles that saw many
//! probe photons were close to resonance. Splitting the drive transients by
//! probe count shows how much the contrast depends on the spectral position
//! drawn at the repump.
//!
//!     cargo run --release --example post_selection

use nv_optics::environment::SpectralModel;
use nv_optics::experiments::{run_postselection, ExperimentConfig, Sampling};
use nv_optics::units::mhz_to_rad_per_ns;

fn main() -> nv_optics::Result<()> {
    let mut cfg = ExperimentConfig::default();
    // Sampled jumps and probe counts, expected drive counts: at 2e5 cycles
    // shot noise would hide the effect in the smallest region.
    cfg.run.sampling = Sampling::MonteCarlo;
    cfg.n_cycles = 200_000;
    cfg = cfg.with_rabi_frequency(mhz_to_rad_per_ns(60.0))?;
    cfg.program.drive_duration = 40.0;
    cfg.spectral = SpectralModel::new(mhz_to_rad_per_ns(40.0), 0.0)?;

    let r = run_postselection(&cfg)?;
    let names = ["low", "middle", "high"];
    for (name, region) in names.iter().zip(&r.regions) {
        let per_pulse = region.histogram.n_cycles.max(1) as f64;
        match &region.fit {
            Ok(f) => println!(
                "{name:>6} n_probe >= {:3}: amplitude/pulse = {:.3e}, tau = {:.2} ns",
                region.n_probe_range.0,
                f.amplitude_at_zero() / per_pulse,
                f.tau
            ),
            Err(e) => println!("{name:>6}: {e}"),
        }
    }
    Ok(())
}
