//! Damped-cosine fits of Rabi transients.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::lm::{levenberg_marquardt, linear_lsq, LmOptions, Problem};
use super::Weighting;
use crate::detection::TimeHistogram;
use crate::{Error, Result};

/// `A·cos(Ω(t − t0))·exp(−(t − t0)/τ) + C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedCosineFit {
    /// rad/ns.
    pub omega: f64,
    /// ns.
    pub tau: f64,
    /// Phase reference in `[0, 2π/Ω)`, ns.
    pub t0: f64,
    /// Envelope amplitude at `t = t0`; always positive.
    pub amplitude: f64,
    pub offset: f64,
    /// Standard errors of `omega, tau, t0, amplitude, offset`.
    pub stderr: [f64; 5],
    pub converged: bool,
}

impl DampedCosineFit {
    pub fn eval(&self, t: f64) -> f64 {
        damped_cosine(&[self.omega, self.tau, self.t0, self.amplitude, self.offset], t)
    }

    /// Envelope amplitude extrapolated to `t = 0` (the drive-pulse start).
    pub fn amplitude_at_zero(&self) -> f64 {
        self.amplitude * (self.t0 / self.tau).exp()
    }
}

fn damped_cosine(p: &[f64], t: f64) -> f64 {
    let s = t - p[2];
    p[3] * (p[0] * s).cos() * (-s / p[1]).exp() + p[4]
}

/// Internal parametrization referenced to the window start `tr`:
/// `B·cos(Ω(t − tr) − φ)·exp(−(t − tr)/τ) + C`. Better conditioned than
/// `(t0, A)` because the envelope is evaluated near its reference point.
fn referenced(p: &[f64], s: f64) -> f64 {
    p[3] * (p[0] * s - p[2]).cos() * (-s / p[1]).exp() + p[4]
}

/// Peak of the Hann-windowed, zero-padded power spectrum, rad/ns.
///
/// Only interior local maxima at two or more cycles per record count; lower
/// frequencies are inside the main lobe of the trend. The peak must beat 20× the median
/// spectral power and hold at least 1 % of the total spectral maximum (which
/// rejects window side lobes of a non-oscillating trend). Ties go to the
/// lower frequency.
pub fn spectral_peak(y: &[f64], dt: f64) -> Result<f64> {
    let n = y.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!("{n} samples")));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let padded = 8 * n;
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); padded];
    for (i, v) in y.iter().enumerate() {
        let hann = 0.5 - 0.5 * (TAU * i as f64 / (n - 1) as f64).cos();
        buf[i] = Complex::new((v - mean) * hann, 0.0);
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let power: Vec<f64> = buf[..=padded / 2].iter().map(|c| c.norm_sqr()).collect();

    let overall = power[1..].iter().copied().fold(0.0, f64::max);
    let mut sorted = power[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];

    let mut best: Option<usize> = None;
    for k in 16..power.len() - 1 {
        if power[k] > power[k - 1] && power[k] >= power[k + 1] && best.is_none_or(|b| power[k] > power[b]) {
            best = Some(k);
        }
    }
    match best {
        Some(k) if overall > 0.0 && power[k] > 20.0 * median && power[k] >= 0.01 * overall => {
            Ok(TAU * k as f64 / (padded as f64 * dt))
        }
        _ => Err(Error::NoOscillation),
    }
}

/// Log-envelope regression: half the swing between consecutive extrema
/// against their mid time. Returns `None` if fewer than two swings or no decay.
fn envelope_decay(t: &[f64], y: &[f64]) -> Option<f64> {
    let extrema: Vec<usize> = (1..y.len() - 1)
        .filter(|&i| (y[i] > y[i - 1] && y[i] >= y[i + 1]) || (y[i] < y[i - 1] && y[i] <= y[i + 1]))
        .collect();
    let (mut xs, mut ls) = (Vec::new(), Vec::new());
    for w in extrema.windows(2) {
        let swing = 0.5 * (y[w[0]] - y[w[1]]).abs();
        if swing > 0.0 {
            xs.push(0.5 * (t[w[0]] + t[w[1]]));
            ls.push(swing.ln());
        }
    }
    if xs.len() < 2 {
        return None;
    }
    let (coef, _) = linear_lsq(&[xs, vec![1.0; ls.len()]], &ls)?;
    (coef[0] < 0.0).then(|| -1.0 / coef[0])
}

/// Best `(B, φ, C)` for fixed `Ω, τ`, and the residual.
fn linear_stage(s: &[f64], y: &[f64], omega: f64, tau: f64) -> Option<([f64; 3], f64)> {
    let c: Vec<f64> = s.iter().map(|&s| (omega * s).cos() * (-s / tau).exp()).collect();
    let d: Vec<f64> = s.iter().map(|&s| (omega * s).sin() * (-s / tau).exp()).collect();
    let (coef, resid) = linear_lsq(&[c, d, vec![1.0; s.len()]], y)?;
    let b = coef[0].hypot(coef[1]);
    let phi = coef[1].atan2(coef[0]);
    Some(([b, phi, coef[2]], resid))
}

/// Fits the bins of `hist` whose centres lie in `window` (ns).
pub fn fit_damped_cosine(hist: &TimeHistogram, window: (f64, f64), weighting: Weighting) -> Result<DampedCosineFit> {
    let (t, y) = hist.window(window.0, window.1);
    fit_damped_cosine_points(&t, &y, weighting)
}

/// [`fit_damped_cosine`] on raw, equally spaced samples.
pub fn fit_damped_cosine_points(t: &[f64], y: &[f64], weighting: Weighting) -> Result<DampedCosineFit> {
    if t.len() != y.len() {
        return Err(Error::invalid("time and count arrays differ in length"));
    }
    if t.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "{} bins in the fit window, need 20",
            t.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("counts must be finite"));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let span = t[t.len() - 1] - t[0];
    let omega0 = spectral_peak(y, dt)?;
    if omega0 * span < 2.0 * TAU {
        return Err(Error::InsufficientData(format!(
            "fit window holds {:.2} periods, need 2",
            omega0 * span / TAU
        )));
    }

    let tr = t[0];
    let s: Vec<f64> = t.iter().map(|&t| t - tr).collect();
    let tau_env = envelope_decay(t, y).unwrap_or(span);
    let mut best: Option<(f64, [f64; 3], f64)> = None;
    for factor in [1.0, 0.25, 0.5, 2.0, 4.0] {
        let tau = (tau_env * factor).clamp(1e-3 * span, 1e3 * span);
        if let Some((lin, resid)) = linear_stage(&s, y, omega0, tau) {
            if best.is_none_or(|b| resid < b.2) {
                best = Some((tau, lin, resid));
            }
        }
    }
    let (tau_init, [b, phi, c], _) = best.ok_or_else(|| Error::FitFailed("degenerate initial guess".into()))?;

    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let weights = weighting.weights(y);
    let options = LmOptions::default();
    let positive_tau = |p: &[f64]| p[1] > 0.0 && p[0] >= 0.0;

    let stage1 = levenberg_marquardt(
        &Problem {
            model: referenced,
            x: &s,
            y,
            weights: weights.as_deref(),
            scales: &[omega0, tau_init, 1.0, scale, scale],
        },
        &[omega0, tau_init, phi, b, c],
        positive_tau,
        &options,
    )?;

    let [omega, tau, phi, b, c] = [0, 1, 2, 3, 4].map(|j| stage1.params[j]);
    let (t0, amplitude) = canonical(omega, tau, phi, b, tr);

    // Polish in the reported parametrization for its covariance.
    let stage2 = levenberg_marquardt(
        &Problem {
            model: damped_cosine,
            x: t,
            y,
            weights: weights.as_deref(),
            scales: &[omega, tau, TAU / omega.max(f64::MIN_POSITIVE), scale, scale],
        },
        &[omega, tau, t0, amplitude, c],
        positive_tau,
        &options,
    )?;
    let p = &stage2.params;
    let b = p[3] * ((p[2] - tr) / p[1]).exp();
    let (t0, amplitude) = canonical(p[0], p[1], p[0] * (p[2] - tr), b, tr);
    Ok(DampedCosineFit {
        omega: p[0],
        tau: p[1],
        t0,
        amplitude,
        offset: p[4],
        stderr: [0, 1, 2, 3, 4].map(|j| stage2.stderr[j]),
        converged: stage1.converged && stage2.converged,
    })
}

/// Converts `B·cos(Ω(t − tr) − φ)·e^{−(t − tr)/τ}` to `A·cos(Ω(t − t0))·e^{−(t − t0)/τ}`
/// with `A > 0` and `t0 ∈ [0, 2π/Ω)`.
fn canonical(omega: f64, tau: f64, phi: f64, b: f64, tr: f64) -> (f64, f64) {
    let (phi, b) = if b < 0.0 { (phi + PI, -b) } else { (phi, b) };
    if omega <= 0.0 {
        return (tr, b);
    }
    let period = TAU / omega;
    let t0 = (tr + phi / omega).rem_euclid(period);
    let t0 = if t0 >= period { 0.0 } else { t0 };
    (t0, b * ((tr - t0) / tau).exp())
}
