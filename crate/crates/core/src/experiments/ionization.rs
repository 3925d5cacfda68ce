//! Photo-ionization: fluorescence bleaching during a long resonant window
//! after each repump, and the power dependence of the bleaching rate.

use super::{spectral_quadrature, ExperimentConfig, Sampling};
use crate::analysis::{fit_exponential, fit_proportional, ExpDecayFit, ProportionalFit};
use crate::bloch::steady_state;
use crate::detection::poisson_draw;
use crate::environment::{ionization_rate, ionization_time};
use crate::pulse::power_to_rabi;
use crate::rng::{stream_rng, Stream};
use crate::Result;

#[derive(Debug)]
pub struct IonizationPoint {
    /// μW.
    pub power: f64,
    /// Bin centres, ns.
    pub t: Vec<f64>,
    /// Ensemble counts per bin.
    pub counts: Vec<f64>,
    pub fit: Result<ExpDecayFit>,
}

#[derive(Debug)]
pub struct IonizationResult {
    pub points: Vec<IonizationPoint>,
    /// Fitted rate against power through the origin; flagged below R² = 0.99.
    pub linear: Result<ProportionalFit>,
}

/// `∫ exp(−Γt) dt` over `[a, b]`.
fn survival_integral(rate: f64, a: f64, b: f64) -> f64 {
    if rate == 0.0 {
        b - a
    } else {
        (-rate * a).exp() * -(-rate * (b - a)).exp_m1() / rate
    }
}

/// Ensemble trace at one power. Expected mode integrates the jump
/// distribution by quadrature with exact exponential survival; the other
/// modes draw one detuning and ionization time per emitter.
fn trace(cfg: &ExperimentConfig, power: f64, power_index: usize) -> Result<Vec<f64>> {
    let run = &cfg.ionization_run;
    let rates = cfg.rates()?;
    let omega = power_to_rabi(power, cfg.emitter.kappa)?;
    let det = &cfg.detector;
    let width = run.window / run.bins as f64;
    let n = run.emitters as f64;
    let mut counts = vec![det.dark_rate * width * n; run.bins];

    let mut add_emitter = |delta: f64, weight: f64, t_ion: Option<f64>| {
        let rho = steady_state(omega, delta, &rates);
        let signal = det.efficiency * rates.gamma1 * rho * weight;
        let gamma = ionization_rate(power, rho, &cfg.ionization);
        for (k, c) in counts.iter_mut().enumerate() {
            let (a, b) = (k as f64 * width, (k + 1) as f64 * width);
            *c += signal
                * match t_ion {
                    None => survival_integral(gamma, a, b),
                    Some(t) => (b.min(t) - a).max(0.0),
                };
        }
        gamma
    };

    if cfg.run.sampling == Sampling::Expected {
        for (delta, w) in spectral_quadrature(&cfg.spectral, cfg.run.quadrature_nodes) {
            add_emitter(delta, w * n, None);
        }
    } else {
        for e in 0..run.emitters {
            let index = ((power_index as u64) << 32) | e as u64;
            let mut rng = stream_rng(cfg.master_seed, Stream::Ionization, index);
            let delta = cfg.spectral.sample(&mut rng);
            let rho = steady_state(omega, delta, &rates);
            let t_ion = ionization_time(ionization_rate(power, rho, &cfg.ionization), &mut rng);
            add_emitter(delta, 1.0, Some(t_ion));
        }
    }
    if cfg.run.sampling == Sampling::Poisson {
        let mut rng = stream_rng(
            cfg.master_seed,
            Stream::Ionization,
            ((power_index as u64) << 32) | u32::MAX as u64,
        );
        counts.iter_mut().for_each(|c| *c = poisson_draw(*c, &mut rng));
    }
    Ok(counts)
}

pub fn run_ionization(cfg: &ExperimentConfig) -> Result<IonizationResult> {
    cfg.validate()?;
    let run = &cfg.ionization_run;
    let width = run.window / run.bins as f64;
    let t: Vec<f64> = (0..run.bins).map(|k| (k as f64 + 0.5) * width).collect();
    let mut points = Vec::with_capacity(run.powers.len());
    for (i, &power) in run.powers.iter().enumerate() {
        let counts = trace(cfg, power, i)?;
        let fit = fit_exponential(&t, &counts, (0.0, run.window), cfg.run.weighting);
        points.push(IonizationPoint {
            power,
            t: t.clone(),
            counts,
            fit,
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| p.fit.as_ref().ok().map(|f| (p.power, f.rate)))
        .unzip();
    Ok(IonizationResult {
        linear: fit_proportional(&x, &y, 0.99),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::IonizationModel;

    #[test]
    fn no_ionization_gives_flat_trace() {
        let mut cfg = ExperimentConfig::default();
        cfg.ionization = IonizationModel::disabled();
        cfg.ionization_run.powers = vec![1.0];
        let r = run_ionization(&cfg).unwrap();
        let fit = r.points[0].fit.as_ref().unwrap();
        assert_eq!(fit.rate, 0.0);
    }

    #[test]
    fn far_detuned_drive_does_not_bleach() {
        let mut cfg = ExperimentConfig::default();
        cfg.spectral.center_offset = 1e6;
        cfg.detector.dark_rate = 0.0;
        cfg.ionization_run.powers = vec![4.0];
        let counts = trace(&cfg, 4.0, 0).unwrap();
        let (first, last) = (counts[0], counts[counts.len() - 1]);
        assert!((first - last).abs() <= 1e-6 * first.max(1e-300), "{first} {last}");
    }

    #[test]
    fn expected_trace_recovers_rate() {
        let mut cfg = ExperimentConfig::default();
        cfg.spectral.jump_fwhm = 0.0;
        cfg.detector.dark_rate = 0.0;
        cfg.ionization_run.powers = vec![2.0];
        let r = run_ionization(&cfg).unwrap();
        let rates = cfg.rates().unwrap();
        let rho = steady_state(power_to_rabi(2.0, cfg.emitter.kappa).unwrap(), 0.0, &rates);
        let gamma = ionization_rate(2.0, rho, &cfg.ionization);
        let fit = r.points[0].fit.as_ref().unwrap();
        assert!((fit.rate / gamma - 1.0).abs() < 1e-6, "{} vs {gamma}", fit.rate);
    }
}
