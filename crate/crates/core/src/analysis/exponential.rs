//! Exponential-decay fits: fluorescence tails and ionization bleaching.

use super::lm::{levenberg_marquardt, linear_lsq, LmOptions, Problem};
use super::Weighting;
use crate::{Error, Result};

/// `A·exp(−rate·(t − t_ref)) + C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpDecayFit {
    /// 1/ns.
    pub rate: f64,
    /// Value above baseline at `t_ref`.
    pub amplitude: f64,
    pub baseline: f64,
    /// Reference time (the first sample), ns.
    pub t_ref: f64,
    /// Standard errors of `rate, amplitude, baseline`.
    pub stderr: [f64; 3],
    pub converged: bool,
}

impl ExpDecayFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (-self.rate * (t - self.t_ref)).exp() + self.baseline
    }
}

/// Fits the samples with `t` in `window`.
pub fn fit_exponential(t: &[f64], y: &[f64], window: (f64, f64), weighting: Weighting) -> Result<ExpDecayFit> {
    if t.len() != y.len() {
        return Err(Error::invalid("time and count arrays differ in length"));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if t.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} points in the fit window, need 4",
            t.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("counts must be finite"));
    }
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return Err(Error::InsufficientData("trace has no positive counts".into()));
    }
    let t_ref = t[0];
    if max - min <= 1e-14 * max {
        return Ok(ExpDecayFit {
            rate: 0.0,
            amplitude: 0.0,
            baseline: y.iter().sum::<f64>() / y.len() as f64,
            t_ref,
            stderr: [0.0; 3],
            converged: true,
        });
    }

    let s: Vec<f64> = t.iter().map(|&t| t - t_ref).collect();
    let span = s[s.len() - 1];
    let tail = (y.len() / 10).max(1);
    let c0 = y[y.len() - tail..].iter().sum::<f64>() / tail as f64;
    let a0 = y[0] - c0;
    let (xs, ls): (Vec<f64>, Vec<f64>) = s
        .iter()
        .zip(&y)
        .filter(|(_, v)| (**v - c0) > 0.1 * a0.abs() && a0 > 0.0)
        .map(|(s, v)| (*s, (v - c0).ln()))
        .unzip();
    let rate0 = match linear_lsq(&[xs.clone(), vec![1.0; xs.len()]], &ls) {
        Some((c, _)) if xs.len() >= 2 && c[0] < 0.0 => -c[0],
        _ => 1.0 / span,
    };
    // Refine amplitude and baseline for this rate.
    let e: Vec<f64> = s.iter().map(|s| (-rate0 * s).exp()).collect();
    let (lin, _) =
        linear_lsq(&[e, vec![1.0; s.len()]], &y).ok_or_else(|| Error::FitFailed("degenerate initial guess".into()))?;

    let weights = weighting.weights(&y);
    let scale = max.abs().max(min.abs());
    let fit = levenberg_marquardt(
        &Problem {
            model: |p: &[f64], s: f64| p[1] * (-p[0] * s).exp() + p[2],
            x: &s,
            y: &y,
            weights: weights.as_deref(),
            scales: &[rate0.max(1.0 / span), scale, scale],
        },
        &[rate0, lin[0], lin[1]],
        |p| p[0] >= 0.0,
        &LmOptions::default(),
    )?;
    Ok(ExpDecayFit {
        rate: fit.params[0],
        amplitude: fit.params[1],
        baseline: fit.params[2],
        t_ref,
        stderr: [fit.stderr[0], fit.stderr[1], fit.stderr[2]],
        converged: fit.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lifetime() {
        let t: Vec<f64> = (0..200).map(|i| 30.0 + i as f64 * 0.256).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.2 * (-(t - 30.0) / 10.9).exp() + 1e-4).collect();
        let fit = fit_exponential(&t, &y, (30.0, 100.0), Weighting::Unweighted).unwrap();
        assert!(fit.converged);
        assert!((fit.rate * 10.9 - 1.0).abs() < 1e-6);
        assert!((fit.amplitude - 0.2).abs() < 1e-8);
    }

    #[test]
    fn constant_trace() {
        let t: Vec<f64> = (0..20).map(f64::from).collect();
        let fit = fit_exponential(&t, &[3.5; 20], (0.0, 100.0), Weighting::Unweighted).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.baseline, 3.5);
    }

    #[test]
    fn no_positive_counts() {
        let t: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(fit_exponential(&t, &[0.0; 20], (0.0, 100.0), Weighting::Unweighted).is_err());
    }

    #[test]
    fn scale_invariance_and_weights() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 2.0).collect();
        let y: Vec<f64> = t.iter().map(|t| 50.0 * (-0.005 * t).exp() + 2.0).collect();
        let a = fit_exponential(&t, &y, (0.0, 1e9), Weighting::Unweighted).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| v * 0.01).collect();
        let b = fit_exponential(&t, &y2, (0.0, 1e9), Weighting::Unweighted).unwrap();
        assert!((a.rate / 0.005 - 1.0).abs() < 1e-6);
        assert!((a.rate / b.rate - 1.0).abs() < 1e-10);
        let w = fit_exponential(&t, &y, (0.0, 1e9), Weighting::Poisson).unwrap();
        assert!((w.rate / 0.005 - 1.0).abs() < 1e-6);
    }
}
