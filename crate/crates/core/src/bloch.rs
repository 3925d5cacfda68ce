//! Two-level optical Bloch equations.
//!
//! The state is the coherence vector `(u, v, w)` with `w = ρ_ee − ρ_gg`. In the
//! frame rotating at the laser frequency, with Rabi amplitude `Ω(t)` and laser
//! detuning `δ`,
//!
//! ```text
//! du/dt =  δ·v − γ2·u
//! dv/dt = −δ·u + Ω·w − γ2·v
//! dw/dt = −Ω·v − γ1·(w + 1)
//! ```
//!
//! where `γ1 = 1/T1` and `γ2 = 1/(2·T1) + 1/T2*`. Integration is classical
//! fourth-order Runge-Kutta on a fixed step chosen from the fastest time scale
//! of the problem, so results are bit-reproducible.

use std::f64::consts::{PI, TAU};

use crate::pulse::Envelope;
use crate::{Error, Result};

/// Integration tolerance used by the population and norm invariants.
pub const INTEGRATION_TOLERANCE: f64 = 1e-6;

/// Upper bound on the RK4 step, ns.
pub const MAX_STEP_NS: f64 = 0.016;

/// Number of steps per period of the fastest oscillation.
pub const STEPS_PER_PERIOD: f64 = 320.0;

/// Parameters of the emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    /// Excited-state lifetime, ns.
    pub t1: f64,
    /// Pure dephasing time, ns.
    pub t2_star: f64,
    /// Power-to-Rabi conversion, rad/ns per sqrt(μW).
    pub kappa: f64,
}

impl EmitterParams {
    pub fn new(t1: f64, t2_star: f64, kappa: f64) -> Result<Self> {
        let params = EmitterParams { t1, t2_star, kappa };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return Err(Error::invalid(format!(
                "t1 must be positive and finite, got {}",
                self.t1
            )));
        }
        if !(self.t2_star.is_finite() && self.t2_star > 0.0) {
            return Err(Error::invalid(format!(
                "t2_star must be positive and finite, got {}",
                self.t2_star
            )));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::invalid(format!(
                "kappa must be non-negative, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Relaxation rates of the Bloch equations, 1/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    /// Population decay rate `1/T1`.
    pub gamma1: f64,
    /// Total coherence decay rate `1/T2 = 1/(2·T1) + 1/T2*`.
    pub gamma2: f64,
}

impl RateSet {
    /// Rates may be zero here (undamped dynamics), unlike [`EmitterParams`].
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1.is_finite() && gamma1 >= 0.0 && gamma2.is_finite() && gamma2 >= 0.0) {
            return Err(Error::invalid(format!(
                "rates must be finite and non-negative, got gamma1={gamma1}, gamma2={gamma2}"
            )));
        }
        Ok(RateSet { gamma1, gamma2 })
    }

    /// T2 = 1/gamma2, ns.
    pub fn t2(&self) -> f64 {
        1.0 / self.gamma2
    }

    /// T1 = 1/gamma1, ns.
    pub fn t1(&self) -> f64 {
        1.0 / self.gamma1
    }
}

pub fn derive_rates(params: &EmitterParams) -> Result<RateSet> {
    params.validate()?;
    let gamma1 = 1.0 / params.t1;
    let gamma2 = 0.5 / params.t1 + 1.0 / params.t2_star;
    Ok(RateSet { gamma1, gamma2 })
}

/// Coherence vector of the two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochState {
    pub const GROUND: BlochState = BlochState {
        u: 0.0,
        v: 0.0,
        w: -1.0,
    };
    pub const EXCITED: BlochState = BlochState { u: 0.0, v: 0.0, w: 1.0 };

    pub fn new(u: f64, v: f64, w: f64) -> Self {
        BlochState { u, v, w }
    }

    /// Excited-state population `(w + 1)/2`.
    pub fn rho_ee(&self) -> f64 {
        0.5 * (self.w + 1.0)
    }

    pub fn norm_squared(&self) -> f64 {
        self.u * self.u + self.v * self.v + self.w * self.w
    }

    fn axpy(&self, h: f64, d: &BlochState) -> BlochState {
        BlochState {
            u: self.u + h * d.u,
            v: self.v + h * d.v,
            w: self.w + h * d.w,
        }
    }
}

impl Default for BlochState {
    fn default() -> Self {
        BlochState::GROUND
    }
}

/// Instantaneous drive: Rabi amplitude and laser detuning, both rad/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub omega: f64,
    pub delta: f64,
}

/// Right-hand side of the Bloch equations. The returned state holds the
/// time derivatives `(du/dt, dv/dt, dw/dt)`.
#[inline]
pub fn bloch_derivative(state: &BlochState, drive: &DriveSample, rates: &RateSet) -> BlochState {
    let BlochState { u, v, w } = *state;
    let DriveSample { omega, delta } = *drive;
    BlochState {
        u: delta * v - rates.gamma2 * u,
        v: -delta * u + omega * w - rates.gamma2 * v,
        w: -omega * v - rates.gamma1 * (w + 1.0),
    }
}

/// Excited-state population sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Strictly increasing sample times, ns.
    pub t_grid: Vec<f64>,
    pub rho_ee: Vec<f64>,
    /// Full Bloch vector at each sample time.
    pub states: Vec<BlochState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.t_grid[0]
    }

    pub fn end(&self) -> f64 {
        self.t_grid[self.t_grid.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Overrides the automatic step. Rejected if it exceeds
    /// `1/(10·max(Ω, |δ|, γ2))`.
    pub max_step: Option<f64>,
    pub initial: BlochState,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            max_step: None,
            initial: BlochState::GROUND,
        }
    }
}

/// Automatic step: `min(16 ps, T_fast/320)` with `T_fast` the period of the
/// fastest of the generalized Rabi frequency and the coherence decay rate.
pub fn automatic_step(omega0: f64, delta: f64, rates: &RateSet) -> f64 {
    let fastest = rabi_generalized(omega0, delta).max(rates.gamma2);
    if fastest > 0.0 {
        MAX_STEP_NS.min(TAU / (STEPS_PER_PERIOD * fastest))
    } else {
        MAX_STEP_NS
    }
}

/// Largest step accepted for the given scales.
pub fn step_limit(omega0: f64, delta: f64, rates: &RateSet) -> f64 {
    let fastest = omega0.max(delta.abs()).max(rates.gamma2);
    if fastest > 0.0 {
        1.0 / (10.0 * fastest)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    h: f64,
    omega_start: f64,
    omega_mid: f64,
    omega_end: f64,
}

/// A precomputed RK4 schedule for one envelope and time grid.
///
/// Building the schedule samples the envelope once; [`Propagator::run`] can
/// then be called for many detunings. Envelope breakpoints (kinks) always
/// coincide with step boundaries.
#[derive(Debug, Clone)]
pub struct Propagator {
    rates: RateSet,
    omega0: f64,
    delta_bound: f64,
    step: f64,
    t_grid: Vec<f64>,
    steps: Vec<Step>,
    /// `marks[i]` is the number of steps taken when grid point `i` is reached.
    marks: Vec<usize>,
    initial: BlochState,
}

impl Propagator {
    /// `delta_bound` is the largest |δ| that [`run`](Self::run) will be asked
    /// for; it enters the automatic step choice.
    pub fn new(
        rates: RateSet,
        envelope: &dyn Envelope,
        omega0: f64,
        delta_bound: f64,
        t_grid: &[f64],
        options: &IntegratorOptions,
    ) -> Result<Self> {
        if t_grid.is_empty() {
            return Err(Error::invalid("empty time grid"));
        }
        if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time grid must be finite and strictly increasing"));
        }
        if !(omega0.is_finite() && omega0 >= 0.0) {
            return Err(Error::invalid(format!("omega0 must be non-negative, got {omega0}")));
        }
        if !delta_bound.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        let delta_bound = delta_bound.abs();
        let step = match options.max_step {
            Some(h) => {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::invalid(format!("step must be positive, got {h}")));
                }
                let limit = step_limit(omega0, delta_bound, &rates);
                if h > limit {
                    return Err(Error::StepTooLarge { step: h, limit });
                }
                h
            }
            None => automatic_step(omega0, delta_bound, &rates),
        };

        let t_first = t_grid[0];
        let t_last = t_grid[t_grid.len() - 1];
        let mut breaks: Vec<f64> = envelope
            .breakpoints()
            .into_iter()
            .filter(|&b| b > t_first && b < t_last)
            .collect();
        breaks.sort_by(f64::total_cmp);

        let mut steps = Vec::new();
        let mut marks = Vec::with_capacity(t_grid.len());
        marks.push(0);
        let mut next_break = 0;
        for pair in t_grid.windows(2) {
            let (mut a, b) = (pair[0], pair[1]);
            while next_break < breaks.len() && breaks[next_break] <= a {
                next_break += 1;
            }
            let mut segment_ends = Vec::new();
            while next_break < breaks.len() && breaks[next_break] < b {
                segment_ends.push(breaks[next_break]);
                next_break += 1;
            }
            segment_ends.push(b);
            for end in segment_ends {
                let span = end - a;
                let n = ((span / step) - 1e-9).ceil().max(1.0) as usize;
                let h = span / n as f64;
                for k in 0..n {
                    let t = a + k as f64 * h;
                    steps.push(Step {
                        h,
                        omega_start: omega0 * envelope.amplitude(t),
                        omega_mid: omega0 * envelope.amplitude(t + 0.5 * h),
                        omega_end: omega0 * envelope.amplitude_before(t + h),
                    });
                }
                a = end;
            }
            marks.push(steps.len());
        }

        Ok(Propagator {
            rates,
            omega0,
            delta_bound,
            step,
            t_grid: t_grid.to_vec(),
            steps,
            marks,
            initial: options.initial,
        })
    }

    /// Nominal step size, ns. Actual steps are this or slightly shorter so
    /// that every grid point and breakpoint is hit exactly.
    pub fn nominal_step(&self) -> f64 {
        self.step
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn run(&self, delta: f64) -> Result<Trajectory> {
        if !delta.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        if delta.abs() > self.delta_bound {
            let limit = step_limit(self.omega0, delta, &self.rates);
            if self.step > limit {
                return Err(Error::StepTooLarge { step: self.step, limit });
            }
        }
        let rates = self.rates;
        let mut state = self.initial;
        let n = self.t_grid.len();
        let mut states = Vec::with_capacity(n);
        states.push(state);
        let mut taken = 0;
        for &mark in &self.marks[1..] {
            for s in &self.steps[taken..mark] {
                state = rk4_step(&state, s, delta, &rates);
            }
            taken = mark;
            states.push(state);
        }
        let rho_ee = states.iter().map(BlochState::rho_ee).collect();
        Ok(Trajectory {
            t_grid: self.t_grid.clone(),
            rho_ee,
            states,
        })
    }
}

#[inline]
fn rk4_step(y: &BlochState, s: &Step, delta: f64, rates: &RateSet) -> BlochState {
    let h = s.h;
    let d0 = DriveSample {
        omega: s.omega_start,
        delta,
    };
    let dm = DriveSample {
        omega: s.omega_mid,
        delta,
    };
    let d1 = DriveSample {
        omega: s.omega_end,
        delta,
    };
    let k1 = bloch_derivative(y, &d0, rates);
    let k2 = bloch_derivative(&y.axpy(0.5 * h, &k1), &dm, rates);
    let k3 = bloch_derivative(&y.axpy(0.5 * h, &k2), &dm, rates);
    let k4 = bloch_derivative(&y.axpy(h, &k3), &d1, rates);
    BlochState {
        u: y.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
        v: y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        w: y.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
    }
}

/// Integrates the Bloch equations from the ground state at `t_grid[0]` under
/// the drive `Ω(t) = omega0 · envelope(t)` at fixed detuning `delta`.
pub fn integrate(
    params: &EmitterParams,
    envelope: &dyn Envelope,
    omega0: f64,
    delta: f64,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let rates = derive_rates(params)?;
    integrate_with(&rates, envelope, omega0, delta, t_grid, &IntegratorOptions::default())
}

/// [`integrate`] with explicit rates (zero allowed) and options.
pub fn integrate_with(
    rates: &RateSet,
    envelope: &dyn Envelope,
    omega0: f64,
    delta: f64,
    t_grid: &[f64],
    options: &IntegratorOptions,
) -> Result<Trajectory> {
    Propagator::new(*rates, envelope, omega0, delta, t_grid, options)?.run(delta)
}

/// Long-time excited-state population under constant drive:
/// `s = Ω0²·T1·T2/(1 + δ²·T2²)`, `ρ_ee = (s/2)/(1 + s)`.
pub fn steady_state(omega0: f64, delta: f64, rates: &RateSet) -> f64 {
    let s = saturation_parameter(omega0, delta, rates);
    if s.is_infinite() {
        return 0.5;
    }
    0.5 * s / (1.0 + s)
}

pub fn saturation_parameter(omega0: f64, delta: f64, rates: &RateSet) -> f64 {
    if omega0 == 0.0 {
        return 0.0;
    }
    let t2 = rates.t2();
    omega0 * omega0 * rates.t1() * t2 / (1.0 + delta * delta * t2 * t2)
}

/// `sqrt(Ω0² + δ²)`.
pub fn rabi_generalized(omega0: f64, delta: f64) -> f64 {
    omega0.hypot(delta)
}

/// Oscillation amplitude relative to resonance, `Ω0²/(Ω0² + δ²)`.
pub fn rabi_amplitude_factor(omega0: f64, delta: f64) -> Result<f64> {
    let denom = omega0 * omega0 + delta * delta;
    if denom == 0.0 {
        return Err(Error::UndefinedInput("amplitude factor needs omega0 or delta non-zero"));
    }
    Ok(omega0 * omega0 / denom)
}

/// Damping constant of on-resonance Rabi oscillations,
/// `1/τ = 3/(4·T1) + 1/(2·T2*)`, ns.
pub fn predicted_damping(params: &EmitterParams) -> Result<f64> {
    params.validate()?;
    Ok(1.0 / (0.75 / params.t1 + 0.5 / params.t2_star))
}

/// Homogeneous Lorentzian FWHM in MHz (ordinary frequency) for a coherence
/// decay rate `gamma2` in 1/ns.
pub fn lorentzian_fwhm_from_t2(gamma2: f64) -> Result<f64> {
    if !(gamma2.is_finite() && gamma2 > 0.0) {
        return Err(Error::invalid(format!("gamma2 must be positive, got {gamma2}")));
    }
    Ok(gamma2 / PI * 1e3)
}
