//! Pulsed Rabi experiments: single transients, spectral averages, and
//! sweeps over power, detuning and Rabi frequency.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{monte_carlo_histogram, quadrature_histogram, ExperimentConfig, Sampling};
use crate::analysis::{fit_damped_cosine, fit_sqrt_law, DampedCosineFit, ProportionalFit};
use crate::detection::TimeHistogram;
use crate::environment::SpectralModel;
use crate::pulse::make_envelope;
use crate::Result;

/// Drive-pulse histogram summed over `n_cycles` repumps of
/// `repetitions_per_repump` pulses each.
///
/// Expected mode integrates the spectral jumps by quadrature and ignores the
/// probe stage; the other modes replay every cycle.
pub fn run_rabi(cfg: &ExperimentConfig) -> Result<TimeHistogram> {
    cfg.validate()?;
    match cfg.run.sampling {
        Sampling::Expected => quadrature_histogram(cfg),
        Sampling::MonteCarlo | Sampling::Poisson => monte_carlo_histogram(cfg),
    }
}

fn fit(cfg: &ExperimentConfig, hist: &TimeHistogram) -> Result<DampedCosineFit> {
    fit_damped_cosine(hist, cfg.fit_window()?, cfg.run.weighting)
}

#[derive(Debug)]
pub struct SpectralAverage {
    /// Transient averaged over the jump distribution.
    pub averaged: TimeHistogram,
    /// Same drive on a frozen line at the centre detuning.
    pub single: TimeHistogram,
    pub averaged_fit: Result<DampedCosineFit>,
    pub single_fit: Result<DampedCosineFit>,
}

/// Spectrally averaged transient next to the frozen-line transient.
pub fn run_spectral_average(cfg: &ExperimentConfig) -> Result<SpectralAverage> {
    let averaged = run_rabi(cfg)?;
    let mut frozen = cfg.clone();
    frozen.spectral = SpectralModel {
        jump_fwhm: 0.0,
        ..cfg.spectral
    };
    let single = run_rabi(&frozen)?;
    Ok(SpectralAverage {
        averaged_fit: fit(cfg, &averaged),
        single_fit: fit(cfg, &single),
        averaged,
        single,
    })
}

#[derive(Debug)]
pub struct PowerSweep {
    /// `(power μW, fit)` per point; failed fits do not stop the sweep.
    pub points: Vec<(f64, Result<DampedCosineFit>)>,
    /// `Ω` against `√P` over the converged points.
    pub sqrt_law: Result<ProportionalFit>,
}

pub fn run_power_sweep(cfg: &ExperimentConfig, powers: &[f64]) -> Result<PowerSweep> {
    cfg.validate()?;
    let points: Vec<(f64, Result<DampedCosineFit>)> = powers
        .par_iter()
        .map(|&p| {
            let mut c = cfg.clone();
            c.program.power = p;
            let fit = run_rabi(&c).and_then(|h| fit(&c, &h));
            (p, fit)
        })
        .collect();
    let good: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|(p, f)| f.as_ref().ok().filter(|f| f.converged).map(|f| (*p, f.omega)))
        .collect();
    Ok(PowerSweep {
        sqrt_law: fit_sqrt_law(&good),
        points,
    })
}

#[derive(Debug)]
pub struct DetuningRow {
    /// Centre detuning, rad/ns.
    pub delta: f64,
    pub transient: TimeHistogram,
    pub fit: Result<DampedCosineFit>,
}

/// One transient per centre detuning (spectral jumps, if any, are averaged
/// around each centre).
pub fn run_detuning_sweep(cfg: &ExperimentConfig, deltas: &[f64]) -> Result<Vec<DetuningRow>> {
    cfg.validate()?;
    deltas
        .par_iter()
        .map(|&delta| {
            let mut c = cfg.clone();
            c.spectral.center_offset = delta;
            let transient = run_rabi(&c)?;
            let fit = fit(&c, &transient);
            Ok(DetuningRow { delta, transient, fit })
        })
        .collect()
}

#[derive(Debug)]
pub struct DampingPoint {
    /// Plateau Rabi frequency, rad/ns.
    pub omega: f64,
    /// Drive duration actually used, ns.
    pub drive_duration: f64,
    pub fit: Result<DampedCosineFit>,
}

/// Damping constant against Rabi frequency. Drive pulses are lengthened to
/// hold at least four periods after the rising edge.
pub fn run_damping_sweep(cfg: &ExperimentConfig, omegas: &[f64]) -> Result<Vec<DampingPoint>> {
    cfg.validate()?;
    omegas
        .par_iter()
        .map(|&omega| {
            let mut c = cfg.with_rabi_frequency(omega)?;
            let rise_end = make_envelope(&c.program)?.rise_end();
            let needed = rise_end + 4.0 * TAU / omega;
            if c.program.drive_duration < needed {
                let extra = needed - c.program.drive_duration;
                c.program.drive_duration = needed;
                if let Some(span) = c.run.span.as_mut() {
                    *span += extra;
                }
                if let Some((_, end)) = c.run.fit_window.as_mut() {
                    *end += extra;
                }
            }
            let hist = run_rabi(&c)?;
            Ok(DampingPoint {
                omega,
                drive_duration: c.program.drive_duration,
                fit: fit(&c, &hist),
            })
        })
        .collect()
}

/// Steepest logarithmic decay rate of the fluorescence within the fall
/// time after the drive turns off, in units of `1/T1`.
///
/// Free decay gives 1; detuned drive, where the population adiabatically
/// follows the falling field back to the ground state, gives a sharp kink
/// well above 1.
pub fn falling_edge_rate(hist: &TimeHistogram, cfg: &ExperimentConfig) -> Result<f64> {
    let env = make_envelope(&cfg.program)?;
    let start = cfg.program.drive_duration;
    let end = start + (5.0 * env.tau_fall()).max(2.0 * cfg.detector.bin_width);
    let (t, y) = hist.window(start - cfg.detector.bin_width, end);
    let t1 = cfg.emitter.t1;
    let mut steepest = f64::NEG_INFINITY;
    for k in 1..t.len() {
        if y[k] > 0.0 && y[k - 1] > 0.0 {
            let rate = -(y[k] / y[k - 1]).ln() / (t[k] - t[k - 1]);
            steepest = steepest.max(rate * t1);
        }
    }
    Ok(steepest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_rad_per_ns;

    #[test]
    fn zero_power_gives_flat_dark_histogram() {
        let mut cfg = ExperimentConfig::default();
        cfg.program.power = 0.0;
        let h = run_rabi(&cfg).unwrap();
        let first = h.counts[0];
        assert!(first > 0.0);
        assert!(h.counts.iter().all(|&c| (c - first).abs() <= 1e-12 * first));
    }

    #[test]
    fn zero_delta_row_equals_rabi() {
        let mut cfg = ExperimentConfig::default();
        cfg.spectral = SpectralModel::frozen();
        let rows = run_detuning_sweep(&cfg, &[0.0]).unwrap();
        assert_eq!(rows[0].transient, run_rabi(&cfg).unwrap());
    }

    #[test]
    fn detuned_transient_has_falling_edge_kink() {
        let mut cfg = ExperimentConfig::default();
        cfg.spectral = SpectralModel::frozen();
        let resonant = run_rabi(&cfg).unwrap();
        cfg.spectral.center_offset = mhz_to_rad_per_ns(300.0);
        let detuned = run_rabi(&cfg).unwrap();
        let k_res = falling_edge_rate(&resonant, &cfg).unwrap();
        let k_det = falling_edge_rate(&detuned, &cfg).unwrap();
        assert!(k_det > 2.0, "{k_det}");
        assert!(k_det > k_res);
    }
}
