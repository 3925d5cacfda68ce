//! Lorentzian line fits of resonance scans.

use super::lm::{levenberg_marquardt, LmOptions, Problem};
use super::Weighting;
use crate::{Error, Result};

/// `h / (1 + ((f − f0)/(w/2))²) + b`, in the units of the frequency axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub height: f64,
    pub baseline: f64,
    /// Standard errors of `center, fwhm, height, baseline`.
    pub stderr: [f64; 4],
    pub converged: bool,
    /// The highest sample sits on the first or last point of the scan.
    pub edge_peak: bool,
}

impl LorentzianFit {
    pub fn eval(&self, f: f64) -> f64 {
        lorentzian(&[self.center, self.fwhm, self.height, self.baseline], f)
    }
}

fn lorentzian(p: &[f64], f: f64) -> f64 {
    let x = (f - p[0]) / (0.5 * p[1]);
    p[2] / (1.0 + x * x) + p[3]
}

/// Full width at half maximum of sampled data by linear interpolation of the
/// half-maximum crossings around the highest sample.
pub(crate) fn half_max_width(f: &[f64], y: &[f64], peak: usize, base: f64) -> Option<f64> {
    let half = base + 0.5 * (y[peak] - base);
    let left = (0..peak)
        .rev()
        .find(|&i| y[i] <= half)
        .map(|i| f[i] + (half - y[i]) / (y[i + 1] - y[i]) * (f[i + 1] - f[i]));
    let right = (peak + 1..y.len())
        .find(|&i| y[i] <= half)
        .map(|i| f[i - 1] + (y[i - 1] - half) / (y[i - 1] - y[i]) * (f[i] - f[i - 1]));
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        (Some(l), None) => Some(2.0 * (f[peak] - l)),
        (None, Some(r)) => Some(2.0 * (r - f[peak])),
        (None, None) => None,
    }
}

/// Index of the highest sample; ties go to the lowest index.
pub(crate) fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if *v > y[best] {
            best = i;
        }
    }
    best
}

pub fn fit_lorentzian(f: &[f64], y: &[f64], weighting: Weighting) -> Result<LorentzianFit> {
    if f.len() != y.len() {
        return Err(Error::invalid("frequency and count arrays differ in length"));
    }
    if f.len() < 5 {
        return Err(Error::InsufficientData(format!("{} scan points, need 5", f.len())));
    }
    if y.iter().chain(f).any(|v| !v.is_finite()) {
        return Err(Error::invalid("scan values must be finite"));
    }
    let peak = argmax(y);
    let base = y.iter().copied().fold(f64::INFINITY, f64::min);
    let height = y[peak] - base;
    if height <= 1e-14 * y[peak].abs().max(f64::MIN_POSITIVE) {
        return Err(Error::FitFailed("flat scan".into()));
    }
    let step = (f[f.len() - 1] - f[0]).abs() / (f.len() - 1) as f64;
    let width0 = half_max_width(f, y, peak, base).unwrap_or(2.0 * step).max(step);
    let weights = weighting.weights(y);
    let scale = y[peak].abs().max(base.abs());
    let fit = levenberg_marquardt(
        &Problem {
            model: lorentzian,
            x: f,
            y,
            weights: weights.as_deref(),
            scales: &[width0, width0, scale, scale],
        },
        &[f[peak], width0, height, base],
        |p| p[1] > 0.0,
        &LmOptions::default(),
    )?;
    let p = &fit.params;
    Ok(LorentzianFit {
        center: p[0],
        fwhm: p[1],
        height: p[2],
        baseline: p[3],
        stderr: [fit.stderr[0], fit.stderr[1], fit.stderr[2], fit.stderr[3]],
        converged: fit.converged,
        edge_peak: peak == 0 || peak == y.len() - 1,
    })
}
