//! Straight lines through the origin: the √P law of the Rabi frequency and
//! the linear power dependence of the ionization rate.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionalFit {
    pub slope: f64,
    pub slope_stderr: f64,
    /// Centred coefficient of determination, `1 − SS_res/SS_tot`.
    pub r_squared: f64,
    /// `r_squared` fell below the acceptance threshold.
    pub flagged: bool,
}

/// Least-squares `y = k·x`. Flags fits with `R² < threshold`.
pub fn fit_proportional(x: &[f64], y: &[f64], threshold: f64) -> Result<ProportionalFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points, need 2", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("points must be finite"));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedInput("all abscissae are zero"));
    }
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    let slope_stderr = (ss_res / (x.len() - 1) as f64 / sxx).sqrt();
    Ok(ProportionalFit {
        slope,
        slope_stderr,
        r_squared,
        flagged: r_squared < threshold,
    })
}

/// `Ω = κ·√P` from `(power, omega)` pairs; flagged when `R² < 0.999`.
pub fn fit_sqrt_law(points: &[(f64, f64)]) -> Result<ProportionalFit> {
    if points.iter().any(|(p, _)| *p < 0.0) {
        return Err(Error::invalid("powers must be non-negative"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().map(|(p, w)| (p.sqrt(), *w)).unzip();
    fit_proportional(&x, &y, 0.999)
}
