//! Levenberg-Marquardt least squares with central-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged when every parameter moves by less than this, relative to
    /// its magnitude (or its scale, whichever is larger).
    pub tolerance: f64,
    /// Relative step of the central-difference Jacobian.
    pub jacobian_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            tolerance: 1e-8,
            jacobian_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Standard errors from the covariance scaled by the reduced χ².
    pub stderr: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Weighted sum of squared residuals.
    pub chi2: f64,
}

/// A least-squares problem: model `f(x; p)` sampled at `x` against `y`.
pub struct Problem<'a, F> {
    pub model: F,
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// Per-point weights (inverse variances); `None` for unweighted.
    pub weights: Option<&'a [f64]>,
    /// Typical magnitude of each parameter; floors the Jacobian step and the
    /// convergence test for parameters near zero.
    pub scales: &'a [f64],
}

impl<F> Problem<'_, F>
where
    F: Fn(&[f64], f64) -> f64,
{
    fn residuals(&self, p: &[f64]) -> Option<DVector<f64>> {
        let mut r = DVector::zeros(self.x.len());
        for (i, (&x, &y)) in self.x.iter().zip(self.y).enumerate() {
            let w = self.weights.map_or(1.0, |w| w[i]).sqrt();
            let v = w * (y - (self.model)(p, x));
            if !v.is_finite() {
                return None;
            }
            r[i] = v;
        }
        Some(r)
    }

    /// Jacobian of the model (not the residual), weighted.
    fn jacobian(&self, p: &[f64], rel: f64) -> DMatrix<f64> {
        let n = self.x.len();
        let m = p.len();
        let mut jac = DMatrix::zeros(n, m);
        let mut work = p.to_vec();
        for j in 0..m {
            let h = rel * p[j].abs().max(self.scales[j].abs()).max(f64::MIN_POSITIVE);
            work[j] = p[j] + h;
            let plus: Vec<f64> = self.x.iter().map(|&x| (self.model)(&work, x)).collect();
            work[j] = p[j] - h;
            for i in 0..n {
                let minus = (self.model)(&work, self.x[i]);
                let w = self.weights.map_or(1.0, |w| w[i]).sqrt();
                jac[(i, j)] = w * (plus[i] - minus) / (2.0 * h);
            }
            work[j] = p[j];
        }
        jac
    }
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Minimizes `Σ w·(y − f(x; p))²` from `p0`.
///
/// `accept` rejects trial parameters outside the model's domain (for example
/// a negative decay time); rejected steps are treated like steps that raise
/// the cost. Returns the last iterate with `converged = false` if the
/// iteration budget runs out.
pub fn levenberg_marquardt<F, A>(
    problem: &Problem<'_, F>,
    p0: &[f64],
    accept: A,
    options: &LmOptions,
) -> Result<LmResult>
where
    F: Fn(&[f64], f64) -> f64,
    A: Fn(&[f64]) -> bool,
{
    let n = problem.x.len();
    let m = p0.len();
    if problem.y.len() != n || problem.scales.len() != m {
        return Err(Error::invalid("fit inputs have inconsistent lengths"));
    }
    if n <= m {
        return Err(Error::InsufficientData(format!("{n} points for {m} parameters")));
    }
    let mut p = p0.to_vec();
    let mut r = problem
        .residuals(&p)
        .ok_or_else(|| Error::FitFailed("model is not finite at the initial guess".into()))?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&p, options.jacobian_step);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let max_diag = jtj.diagonal().max();
        if max_diag == 0.0 {
            converged = true;
            break;
        }

        let mut stepped = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for j in 0..m {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-12 * max_diag);
            }
            let Some(delta) = solve(&a, &grad) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let trial_r = if accept(&trial) {
                problem.residuals(&trial)
            } else {
                None
            };
            match trial_r {
                Some(tr) if tr.norm_squared() <= cost => {
                    let small = delta
                        .iter()
                        .enumerate()
                        .all(|(j, d)| d.abs() <= options.tolerance * p[j].abs().max(problem.scales[j].abs()));
                    p = trial;
                    cost = tr.norm_squared();
                    r = tr;
                    lambda = (lambda / 10.0).max(1e-12);
                    stepped = true;
                    if small {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if converged {
            break;
        }
        if !stepped {
            // No descent direction left at any damping: we sit at the minimum
            // to working precision.
            converged = true;
            break;
        }
    }

    let jac = problem.jacobian(&p, options.jacobian_step);
    let jtj = jac.transpose() * &jac;
    let dof = (n - m) as f64;
    let stderr = match jtj.clone().try_inverse() {
        Some(cov) => (0..m).map(|j| (cov[(j, j)] * cost / dof).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; m],
    };
    Ok(LmResult {
        params: p,
        stderr,
        converged,
        iterations,
        chi2: cost,
    })
}

/// Ordinary linear least squares `min |A·c − y|²` via the normal equations.
pub(crate) fn linear_lsq(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let m = columns.len();
    let a = DMatrix::from_fn(n, m, |i, j| columns[j][i]);
    let yv = DVector::from_column_slice(y);
    let coef = solve(&(a.transpose() * &a), &(a.transpose() * &yv))?;
    let resid = (&a * &coef - yv).norm_squared();
    Some((coef.iter().copied().collect(), resid))
}
