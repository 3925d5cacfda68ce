//! The fitting routines on synthetic data with known parameters.

use nv_optics::analysis::{fit_damped_cosine_points, fit_exponential, fit_lorentzian, Weighting};
use nv_optics::rng::{stream_rng, Stream};
use rand_distr::{Distribution, Normal};

fn main() -> nv_optics::Result<()> {
    let mut rng = stream_rng(7, Stream::Auxiliary, 0);
    let noise = Normal::new(0.0, 0.05).unwrap();

    // y = A·cos(Ω(t − t0))·exp(−(t − t0)/τ) + C
    let (omega, tau, t0) = (2.5, 8.4, 1.8);
    let t: Vec<f64> = (0..120).map(|i| 2.0 + 0.25 * i as f64).collect();
    let y: Vec<f64> = t
        .iter()
        .map(|&t| (omega * (t - t0)).cos() * (-(t - t0) / tau).exp() + 1.0 + noise.sample(&mut rng))
        .collect();
    let f = fit_damped_cosine_points(&t, &y, Weighting::Unweighted)?;
    println!(
        "damped cosine: Omega {:.4} (2.5)  tau {:.3} (8.4)  t0 {:.3} (1.8)",
        f.omega, f.tau, f.t0
    );

    let y: Vec<f64> = t
        .iter()
        .map(|&t| 3.0 * (-0.1 * t).exp() + 0.2 + noise.sample(&mut rng))
        .collect();
    let e = fit_exponential(&t, &y, (t[0], t[t.len() - 1]), Weighting::Unweighted)?;
    println!("exponential:   rate {:.4} (0.1)", e.rate);

    let f_axis: Vec<f64> = (0..201).map(|i| -150.0 + 1.5 * i as f64).collect();
    let y: Vec<f64> = f_axis
        .iter()
        .map(|&f| 5.0 / (1.0 + ((f - 12.0) / 23.0).powi(2)) + 1.0 + noise.sample(&mut rng))
        .collect();
    let l = fit_lorentzian(&f_axis, &y, Weighting::Unweighted)?;
    println!("lorentzian:    centre {:.2} (12)  FWHM {:.2} (46)", l.center, l.fwhm);
    Ok(())
}
