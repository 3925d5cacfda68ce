//! Fluorescence bleaching under continuous resonant drive. The decay rate of
//! the ensemble trace grows linearly with power.

use nv_optics::experiments::{run_ionization, ExperimentConfig, Sampling};

fn main() -> nv_optics::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.run.sampling = Sampling::MonteCarlo;
    let r = run_ionization(&cfg)?;
    for p in &r.points {
        match &p.fit {
            Ok(f) => println!("{:5.2} uW  1/Gamma = {:8.2} ms", p.power, 1e-6 / f.rate),
            Err(e) => println!("{:5.2} uW  {e}", p.power),
        }
    }
    let lin = r.linear?;
    println!(
        "Gamma/P = {:.3e} ± {:.1e} per ns·uW, R^2 = {:.4}",
        lin.slope, lin.slope_stderr, lin.r_squared
    );
    Ok(())
}
