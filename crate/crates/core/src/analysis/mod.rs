//! Nonlinear least-squares fits that turn histograms and scans into physical
//! parameters.
//!
//! All fits share one Levenberg-Marquardt core ([`lm`]) with numerical
//! Jacobians. Unweighted fits are invariant under rescaling of the counts.

use std::io::Write;

pub mod damped_cosine;
pub mod exponential;
pub mod linear;
pub mod lm;
pub mod lorentzian;
pub mod scans;

pub use damped_cosine::{fit_damped_cosine, fit_damped_cosine_points, spectral_peak, DampedCosineFit};
pub use exponential::{fit_exponential, ExpDecayFit};
pub use linear::{fit_proportional, fit_sqrt_law, ProportionalFit};
pub use lorentzian::{fit_lorentzian, LorentzianFit};
pub use scans::{align_and_sum_scans, AlignedScans};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Inverse Poisson variance, `1/max(count, 1)`.
    Poisson,
}

impl Weighting {
    pub(crate) fn weights(self, y: &[f64]) -> Option<Vec<f64>> {
        match self {
            Weighting::Unweighted => None,
            Weighting::Poisson => Some(y.iter().map(|c| 1.0 / c.max(1.0)).collect()),
        }
    }
}

/// One line of a fit report.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub model: String,
    pub param: &'static str,
    pub value: f64,
    pub stderr: f64,
    pub converged: bool,
}

impl FitRow {
    pub fn new(model: impl Into<String>, param: &'static str, value: f64, stderr: f64, converged: bool) -> Self {
        FitRow {
            model: model.into(),
            param,
            value,
            stderr,
            converged,
        }
    }
}

/// Report rows for a damped-cosine fit, frequencies in MHz.
pub fn damped_cosine_rows(model: &str, fit: &DampedCosineFit) -> Vec<FitRow> {
    let mhz = crate::units::rad_per_ns_to_mhz;
    let c = fit.converged;
    vec![
        FitRow::new(model, "omega_MHz", mhz(fit.omega), mhz(fit.stderr[0]), c),
        FitRow::new(model, "tau_ns", fit.tau, fit.stderr[1], c),
        FitRow::new(model, "t0_ns", fit.t0, fit.stderr[2], c),
        FitRow::new(model, "amplitude", fit.amplitude, fit.stderr[3], c),
        FitRow::new(model, "offset", fit.offset, fit.stderr[4], c),
    ]
}

/// Placeholder rows for a fit that could not be made.
pub fn failed_rows(model: &str, params: &[&'static str]) -> Vec<FitRow> {
    params
        .iter()
        .map(|p| FitRow::new(model, p, f64::NAN, f64::NAN, false))
        .collect()
}

pub fn lorentzian_rows(model: &str, fit: &LorentzianFit) -> Vec<FitRow> {
    let c = fit.converged;
    vec![
        FitRow::new(model, "center_MHz", fit.center, fit.stderr[0], c),
        FitRow::new(model, "fwhm_MHz", fit.fwhm, fit.stderr[1], c),
        FitRow::new(model, "height", fit.height, fit.stderr[2], c),
        FitRow::new(model, "baseline", fit.baseline, fit.stderr[3], c),
    ]
}

/// CSV with header `model,param,value,stderr,converged`.
pub fn write_fit_csv<W: Write>(rows: &[FitRow], mut out: W) -> Result<()> {
    writeln!(out, "model,param,value,stderr,converged")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.model, r.param, r.value, r.stderr, r.converged)?;
    }
    Ok(())
}
