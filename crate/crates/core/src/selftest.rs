//! Built-in oracle and invariant checks, run by the `selftest` subcommand.

use rand::Rng;

use crate::bloch::{automatic_step, integrate_with, steady_state, BlochState, IntegratorOptions, RateSet};
use crate::experiments::{run_postselection, run_rabi, ExperimentConfig, Sampling};
use crate::pulse::{ConstantEnvelope, ShapedPulse};
use crate::rng::{stream_rng, Stream};
use crate::units::mhz_to_rad_per_ns;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn bound(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            passed: value < limit,
            detail: format!("{value:.3e} < {limit:.0e}"),
        }
    }

    fn from_result(name: &'static str, r: Result<Check>) -> Self {
        r.unwrap_or_else(|e| Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        })
    }
}

fn emitter_rates() -> RateSet {
    RateSet::new(1.0 / 10.9, 0.5 / 10.9 + 0.1).expect("valid rates")
}

/// Long constant drive against the closed-form steady state on 100
/// detunings across ±300 MHz.
pub fn steady_state_agreement() -> Result<Check> {
    let rates = emitter_rates();
    let omega = mhz_to_rad_per_ns(100.0);
    let t = [0.0, 400.0];
    let mut worst = 0.0f64;
    for i in 0..100 {
        let delta = mhz_to_rad_per_ns(-300.0 + 600.0 * i as f64 / 99.0);
        let traj = integrate_with(
            &rates,
            &ConstantEnvelope(1.0),
            omega,
            delta,
            &t,
            &IntegratorOptions::default(),
        )?;
        worst = worst.max((traj.rho_ee[1] - steady_state(omega, delta, &rates)).abs());
    }
    Ok(Check::bound("steady state vs long-time integration", worst, 1e-4))
}

/// Undamped resonant drive: `ρ_ee = sin²(Ωt/2)`.
pub fn undamped_rabi() -> Result<Check> {
    let rates = RateSet::new(0.0, 0.0)?;
    let omega = mhz_to_rad_per_ns(410.0);
    let t: Vec<f64> = (0..=3000).map(|i| i as f64 * 0.01).collect();
    let traj = integrate_with(
        &rates,
        &ConstantEnvelope(1.0),
        omega,
        0.0,
        &t,
        &IntegratorOptions::default(),
    )?;
    let worst = t
        .iter()
        .zip(&traj.rho_ee)
        .map(|(t, r)| (r - (0.5 * omega * t).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    Ok(Check::bound("undamped sin^2 oscillation", worst, 1e-6))
}

/// Halving the automatic step changes `ρ_ee` by less than 1e-7.
pub fn step_halving() -> Result<Check> {
    let rates = emitter_rates();
    let omega = mhz_to_rad_per_ns(410.0);
    let pulse = ShapedPulse::new(30.0, 1.3, 1.3)?;
    let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
    let mut worst = 0.0f64;
    for delta in [0.0, mhz_to_rad_per_ns(300.0)] {
        let h = automatic_step(omega, delta, &rates);
        let run = |step: f64| {
            let opts = IntegratorOptions {
                max_step: Some(step),
                ..Default::default()
            };
            integrate_with(&rates, &pulse, omega, delta, &t, &opts)
        };
        let (a, b) = (run(h)?, run(0.5 * h)?);
        for (x, y) in a.rho_ee.iter().zip(&b.rho_ee) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(Check::bound("RK4 step halving", worst, 1e-7))
}

/// `u² + v² + w² ≤ 1` along randomly drawn damped trajectories.
pub fn bloch_norm_bound() -> Result<Check> {
    let mut rng = stream_rng(0, Stream::Auxiliary, 1);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let t1 = rng.random_range(1.0..30.0);
        let rates = RateSet::new(1.0 / t1, 0.5 / t1 + rng.random_range(0.0..0.3))?;
        let omega = mhz_to_rad_per_ns(rng.random_range(0.0..500.0));
        let delta = mhz_to_rad_per_ns(rng.random_range(-300.0..300.0));
        let pulse = ShapedPulse::new(
            rng.random_range(5.0..30.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
        )?;
        let t: Vec<f64> = (0..=500).map(|i| i as f64 * 0.1).collect();
        let traj = integrate_with(&rates, &pulse, omega, delta, &t, &IntegratorOptions::default())?;
        worst = worst.max(
            traj.states
                .iter()
                .map(BlochState::norm_squared)
                .fold(f64::NEG_INFINITY, f64::max),
        );
    }
    Ok(Check {
        name: "Bloch vector norm <= 1",
        passed: worst <= 1.0 + 1e-9,
        detail: format!("max |r|^2 = {worst:.12}"),
    })
}

fn small_monte_carlo() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.n_cycles = 2000;
    cfg.program.repetitions_per_repump = 10;
    cfg.program.probe_duration = 2e7;
    cfg.run.span = Some(50.0);
    cfg.run.sampling = Sampling::Poisson;
    cfg.master_seed = 20_240_611;
    cfg
}

/// Post-selection table summed over all probe bins equals the unconditioned
/// histogram, bin for bin.
pub fn partition_identity() -> Result<Check> {
    let cfg = small_monte_carlo();
    let total = run_postselection(&cfg)?.table.total()?;
    let rabi = run_rabi(&cfg)?;
    let mismatched = total.counts.iter().zip(&rabi.counts).filter(|(a, b)| a != b).count();
    Ok(Check {
        name: "post-selection partition identity",
        passed: mismatched == 0 && total.n_cycles == rabi.n_cycles,
        detail: format!("{mismatched} of {} bins differ", rabi.n_bins()),
    })
}

/// Same seed, same histogram, on one thread and on many.
pub fn seed_reproducibility() -> Result<Check> {
    let cfg = small_monte_carlo();
    let a = run_rabi(&cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::Error::FitFailed(e.to_string()))?;
    let b = pool.install(|| run_rabi(&cfg))?;
    let mut other = cfg.clone();
    other.master_seed += 1;
    let c = run_rabi(&other)?;
    Ok(Check {
        name: "bit-exact seed reproducibility",
        passed: a == b && a != c,
        detail: format!("identical: {}, other seed differs: {}", a == b, a != c),
    })
}

/// All checks, in a fixed order.
pub fn run_selftest() -> Vec<Check> {
    vec![
        Check::from_result("steady state vs long-time integration", steady_state_agreement()),
        Check::from_result("undamped sin^2 oscillation", undamped_rabi()),
        Check::from_result("RK4 step halving", step_halving()),
        Check::from_result("Bloch vector norm <= 1", bloch_norm_bound()),
        Check::from_result("post-selection partition identity", partition_identity()),
        Check::from_result("bit-exact seed reproducibility", seed_reproducibility()),
    ]
}
