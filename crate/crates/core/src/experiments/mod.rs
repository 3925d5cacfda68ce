//! Seeded protocol runners, one per measurement.
//!
//! Every runner is a pure function of an [`ExperimentConfig`]: the same
//! config and seed give bit-identical output regardless of thread count.
//!
//! Drive-pulse experiments share one cycle engine. A *cycle* is one green
//! repump followed by an optional weak probe and `repetitions_per_repump`
//! drive pulses. In [`Sampling::Expected`] mode the spectral distribution is
//! integrated by a fixed Gaussian quadrature; otherwise every cycle draws its
//! own detuning and charge history, and [`Sampling::Poisson`] adds shot
//! noise.

use std::collections::hash_map::{Entry, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Weighting;
use crate::bloch::{derive_rates, steady_state, EmitterParams, IntegratorOptions, Propagator, RateSet};
use crate::detection::{expected_counts, poisson_draw, probe_mean, sample_counts, DetectorModel, TimeHistogram};
use crate::environment::{
    apply_repump, intervals_survived, ionization_rate, ionization_time, EnvironmentState, IonizationModel,
    SpectralModel,
};
use crate::pulse::{make_envelope, power_to_rabi, rabi_to_power, PulseProgram};
use crate::rng::{stream_rng, Stream};
use crate::units::mhz_to_rad_per_ns;
use crate::{Error, Result};

pub mod ionization;
pub mod postselect;
pub mod rabi;
pub mod scans;

pub use ionization::{run_ionization, IonizationPoint, IonizationResult};
pub use postselect::{run_postselection, PostSelectionResult, PostSelectionTable, Region};
pub use rabi::{
    falling_edge_rate, run_damping_sweep, run_detuning_sweep, run_power_sweep, run_rabi, run_spectral_average,
    DampingPoint, DetuningRow, PowerSweep, SpectralAverage,
};
pub use scans::{run_resonance_scan_series, ScanSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Deterministic expected counts; spectral jumps integrated by quadrature.
    #[default]
    Expected,
    /// Per-cycle spectral jumps and charge history, expected photon counts.
    #[value(name = "montecarlo")]
    MonteCarlo,
    /// Monte Carlo plus Poisson shot noise.
    Poisson,
}

/// Settings of the resonance-scan series.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    /// Scan laser power, μW.
    pub power: f64,
    /// Half-width of the swept range, rad/ns.
    pub half_span: f64,
    pub points: usize,
    pub n_scans: usize,
    /// Integration time per scan point, ns.
    pub dwell: f64,
}

/// Settings of the photo-ionization measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct IonizationRun {
    /// Drive powers, μW.
    pub powers: Vec<f64>,
    /// Resonant window after each repump, ns.
    pub window: f64,
    pub bins: usize,
    pub emitters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub sampling: Sampling,
    /// Histogram span after the drive-pulse start, ns; defaults to the pulse
    /// period.
    pub span: Option<f64>,
    /// Damped-cosine fit window, ns; defaults to `[rise end, drive end]`.
    pub fit_window: Option<(f64, f64)>,
    pub weighting: Weighting,
    /// Nodes of the spectral quadrature.
    pub quadrature_nodes: usize,
    /// Power-sweep powers, μW.
    pub powers: Vec<f64>,
    /// Detuning-sweep detunings, rad/ns.
    pub deltas: Vec<f64>,
    /// Damping-sweep Rabi frequencies, rad/ns.
    pub omegas: Vec<f64>,
    /// Post-selection region boundaries as percentiles of `n_probe`.
    pub region_percentiles: (f64, f64),
    /// Width of the `n_probe` bins of the post-selection table.
    pub probe_bin: u64,
}

/// Everything a runner needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub emitter: EmitterParams,
    pub program: PulseProgram,
    pub spectral: SpectralModel,
    pub ionization: IonizationModel,
    pub detector: DetectorModel,
    /// Repump cycles.
    pub n_cycles: u64,
    pub master_seed: u64,
    pub run: RunSettings,
    pub scan: ScanSettings,
    pub ionization_run: IonizationRun,
}

impl Default for ExperimentConfig {
    /// The resolved defaults of an empty config file.
    fn default() -> Self {
        crate::config::ConfigDocument::default()
            .resolve(None)
            .to_experiment()
            .expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.emitter.validate()?;
        self.program.validate()?;
        self.spectral.validate()?;
        self.ionization.validate()?;
        self.detector.validate()?;
        if self.n_cycles < 1 {
            return Err(Error::invalid("cycles must be at least 1"));
        }
        let r = &self.run;
        if let Some(span) = r.span {
            if !(span.is_finite() && span >= self.detector.bin_width) {
                return Err(Error::invalid(format!("span must cover at least one bin, got {span}")));
            }
        }
        if let Some((a, b)) = r.fit_window {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::invalid(format!("fit window [{a}, {b}] is empty")));
            }
        }
        if r.quadrature_nodes < 1 {
            return Err(Error::invalid("quadrature needs at least one node"));
        }
        if r.powers
            .iter()
            .chain(&r.deltas)
            .chain(&r.omegas)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("sweep values must be finite"));
        }
        if r.powers.iter().any(|p| *p < 0.0) || r.omegas.iter().any(|w| *w <= 0.0) {
            return Err(Error::invalid("sweep powers must be >= 0 and Rabi frequencies > 0"));
        }
        let (lo, hi) = r.region_percentiles;
        if !(0.0 < lo && lo < hi && hi < 100.0) {
            return Err(Error::invalid(format!(
                "region percentiles must satisfy 0 < {lo} < {hi} < 100"
            )));
        }
        if r.probe_bin < 1 {
            return Err(Error::invalid("probe bin width must be at least 1"));
        }
        let s = &self.scan;
        if !(s.power >= 0.0 && s.half_span > 0.0 && s.points >= 5 && s.n_scans >= 1 && s.dwell > 0.0) {
            return Err(Error::invalid(
                "scan settings need power >= 0, span > 0, >= 5 points, >= 1 scan, dwell > 0",
            ));
        }
        let i = &self.ionization_run;
        if i.powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("ionization powers must be >= 0"));
        }
        if !(i.window > 0.0 && i.bins >= 4 && i.emitters >= 1) {
            return Err(Error::invalid(
                "ionization run needs window > 0, >= 4 bins, >= 1 emitter",
            ));
        }
        Ok(())
    }

    pub fn rates(&self) -> Result<RateSet> {
        derive_rates(&self.emitter)
    }

    /// Plateau Rabi frequency of the drive, rad/ns.
    pub fn omega0(&self) -> Result<f64> {
        power_to_rabi(self.program.power, self.emitter.kappa)
    }

    /// Copy driven at Rabi frequency `omega0` (rad/ns) instead of the
    /// configured power.
    pub fn with_rabi_frequency(&self, omega0: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.program.power = rabi_to_power(omega0, self.emitter.kappa)?;
        Ok(cfg)
    }

    pub fn span(&self) -> f64 {
        self.run.span.unwrap_or_else(|| self.program.cycle_duration())
    }

    /// Fit window for Rabi transients, ns.
    pub fn fit_window(&self) -> Result<(f64, f64)> {
        if let Some(w) = self.run.fit_window {
            return Ok(w);
        }
        self.program.validate()?;
        Ok(default_fit_window(self.program.drive_duration, self.program.rise_time))
    }

    /// Drive pulses per cycle as a float.
    fn reps(&self) -> f64 {
        self.program.repetitions_per_repump as f64
    }
}

/// `[rise end, drive end]`: the plateau of the drive pulse, where the
/// transient is a damped cosine.
pub fn default_fit_window(drive_duration: f64, rise_time: f64) -> (f64, f64) {
    let rise_end = (rise_time / 9f64.ln() * 100f64.ln()).min(drive_duration);
    (rise_end, drive_duration)
}

/// Probe power giving saturation parameter `s` on resonance, μW. Zero when
/// `κ = 0`.
pub fn power_for_saturation(s: f64, emitter: &EmitterParams) -> Result<f64> {
    let rates = derive_rates(emitter)?;
    if emitter.kappa <= 0.0 {
        return Ok(0.0);
    }
    let omega = (s / (rates.t1() * rates.t2())).sqrt();
    rabi_to_power(omega, emitter.kappa)
}

/// Equally spaced Gaussian quadrature over ±3σ: `(detuning, weight)` pairs
/// with weights summing to one. A frozen line gives its centre alone.
pub fn spectral_quadrature(spectral: &SpectralModel, nodes: usize) -> Vec<(f64, f64)> {
    let sigma = spectral.sigma();
    if sigma == 0.0 || nodes == 1 {
        return vec![(spectral.center_offset, 1.0)];
    }
    let raw: Vec<(f64, f64)> = (0..nodes)
        .map(|j| {
            let x = -3.0 * sigma + 6.0 * sigma * j as f64 / (nodes - 1) as f64;
            (spectral.center_offset + x, (-0.5 * (x / sigma).powi(2)).exp())
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    raw.into_iter().map(|(d, w)| (d, w / total)).collect()
}

/// Expected drive-pulse transients for one envelope, reusable across
/// detunings.
pub struct TransientEngine {
    propagator: Propagator,
    rates: RateSet,
    detector: DetectorModel,
    span: f64,
}

/// Trajectory samples per histogram bin.
const SAMPLES_PER_BIN: usize = 8;

impl TransientEngine {
    /// `delta_bound` is the largest |δ| that will be requested.
    pub fn new(cfg: &ExperimentConfig, delta_bound: f64) -> Result<Self> {
        let rates = cfg.rates()?;
        let envelope = make_envelope(&cfg.program)?;
        let span = cfg.span();
        let bin = cfg.detector.bin_width;
        let n_bins = (span / bin + 1e-9).floor() as usize;
        let n = n_bins * SAMPLES_PER_BIN;
        let t_grid: Vec<f64> = (0..=n).map(|i| i as f64 * bin / SAMPLES_PER_BIN as f64).collect();
        let propagator = Propagator::new(
            rates,
            &envelope,
            cfg.omega0()?,
            delta_bound,
            &t_grid,
            &IntegratorOptions::default(),
        )?;
        Ok(TransientEngine {
            propagator,
            rates,
            detector: DetectorModel {
                dark_rate: 0.0,
                ..cfg.detector
            },
            span,
        })
    }

    /// Expected signal counts (no dark counts) of one drive pulse at
    /// detuning `delta`.
    pub fn signal(&self, delta: f64) -> Result<TimeHistogram> {
        let traj = self.propagator.run(delta)?;
        expected_counts(&traj, &self.detector, self.rates.gamma1, self.span)
    }
}

/// Ionization rate during the drive at detuning `delta`, 1/ns.
fn drive_ionization_rate(cfg: &ExperimentConfig, omega0: f64, rates: &RateSet, delta: f64) -> f64 {
    ionization_rate(cfg.program.power, steady_state(omega0, delta, rates), &cfg.ionization)
}

/// Adds `bright·signal + reps·dark` to `hist`.
fn add_cycle(hist: &mut TimeHistogram, signal: &TimeHistogram, bright: f64, dark_total: f64) {
    for (h, s) in hist.counts.iter_mut().zip(&signal.counts) {
        *h += bright * s + dark_total;
    }
}

/// Deterministic spectral average: `n_cycles` repumps, each contributing its
/// expected number of bright pulses.
pub(crate) fn quadrature_histogram(cfg: &ExperimentConfig) -> Result<TimeHistogram> {
    cfg.validate()?;
    let nodes = spectral_quadrature(&cfg.spectral, cfg.run.quadrature_nodes);
    let bound = nodes.iter().fold(0.0f64, |m, (d, _)| m.max(d.abs()));
    let engine = TransientEngine::new(cfg, bound)?;
    let rates = engine.rates;
    let omega0 = cfg.omega0()?;
    let reps = cfg.reps();
    let cycles = cfg.n_cycles as f64;

    let signals: Vec<TimeHistogram> = nodes
        .par_iter()
        .map(|(d, _)| engine.signal(*d))
        .collect::<Result<_>>()?;
    let mut hist = signals[0].zeros_like();
    for ((delta, weight), signal) in nodes.iter().zip(&signals) {
        let rate = drive_ionization_rate(cfg, omega0, &rates, *delta);
        let p = (-rate * cfg.program.drive_duration).exp();
        // Expected pulses before ionization: Σ_{i<R} p^i.
        let bright = if p < 1.0 {
            -(reps * p.ln()).exp_m1() / (1.0 - p)
        } else {
            reps
        };
        add_cycle(&mut hist, signal, cycles * weight * bright, 0.0);
    }
    let dark = cycles * reps * cfg.detector.dark_rate * cfg.detector.bin_width;
    hist.counts.iter_mut().for_each(|c| *c += dark);
    hist.n_cycles = cfg.n_cycles * cfg.program.repetitions_per_repump as u64;
    Ok(hist)
}

/// Outcome of one repump cycle's environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    /// Detuning during the cycle, rad/ns.
    pub delta: f64,
    pub n_probe: u64,
    /// Drive pulses completed before ionization.
    pub bright_pulses: u32,
}

/// Sequential pass over the cycles: repump, probe, and charge history. Cheap
/// compared with the Bloch integrations, and sequential because the charge
/// state carries over between cycles when repumping can fail.
pub fn environment_pass(cfg: &ExperimentConfig) -> Result<Vec<CycleRecord>> {
    cfg.validate()?;
    let rates = cfg.rates()?;
    let omega0 = cfg.omega0()?;
    let omega_probe = power_to_rabi(cfg.program.probe_power, cfg.emitter.kappa)?;
    let program = &cfg.program;
    let det = &cfg.detector;
    let dark_probe = det.dark_rate * program.probe_duration;

    let mut state = EnvironmentState::new(cfg.spectral.center_offset);
    let mut records = Vec::with_capacity(cfg.n_cycles as usize);
    for c in 0..cfg.n_cycles {
        let mut rng = stream_rng(cfg.master_seed, Stream::Environment, c);
        state = apply_repump(state, &cfg.spectral, &cfg.ionization, &mut rng);
        let delta = state.delta_offset;

        let mut n_probe = 0;
        if program.probe_duration > 0.0 {
            let mut fraction = 0.0;
            if state.is_bright() {
                fraction = 1.0;
                if cfg.ionization.during_probe {
                    let rho = steady_state(omega_probe, delta, &rates);
                    let t_ion = ionization_time(ionization_rate(program.probe_power, rho, &cfg.ionization), &mut rng);
                    if t_ion < program.probe_duration {
                        fraction = t_ion / program.probe_duration;
                        state.charge = crate::environment::ChargeState::Ionized;
                    }
                }
            }
            let signal = probe_mean(delta, program, &cfg.emitter, det)? - dark_probe;
            let mut probe_rng = stream_rng(cfg.master_seed, Stream::Probe, c);
            n_probe = poisson_draw(signal * fraction + dark_probe, &mut probe_rng) as u64;
        }

        let mut bright_pulses = 0;
        if state.is_bright() {
            let rate = drive_ionization_rate(cfg, omega0, &rates, delta);
            let reps = program.repetitions_per_repump;
            bright_pulses = intervals_survived(rate, program.drive_duration, reps, &mut rng);
            if bright_pulses < reps {
                state.charge = crate::environment::ChargeState::Ionized;
            }
        }
        records.push(CycleRecord {
            delta,
            n_probe,
            bright_pulses,
        });
    }
    Ok(records)
}

/// Cycles per parallel work unit.
const CHUNK: usize = 256;
/// Work units merged per batch; bounds memory for keyed accumulation.
const BATCH: usize = 64;

/// Detuning step of the signal table, MHz.
const TABLE_STEP_MHZ: f64 = 0.1;

/// Signals on a uniform detuning grid with Catmull-Rom interpolation.
/// Relative error is ~(h·span)⁴, about 1e-5 for the default pulse.
struct SignalTable {
    start: f64,
    step: f64,
    rows: Vec<Vec<f64>>,
}

impl SignalTable {
    /// Tabulates only when the records outnumber the grid points severalfold;
    /// smaller runs integrate every detuning exactly.
    fn build_if_worthwhile(engine: &TransientEngine, records: &[CycleRecord]) -> Result<Option<Self>> {
        let (lo, hi) = records.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.delta), hi.max(r.delta))
        });
        if records.is_empty() || hi <= lo {
            return Ok(None);
        }
        let step = mhz_to_rad_per_ns(TABLE_STEP_MHZ);
        let intervals = ((hi - lo) / step).ceil() as usize;
        // One guard node on each side for the cubic stencil.
        let n = intervals + 3;
        if records.len() < 4 * n {
            return Ok(None);
        }
        let start = lo - step;
        let rows = (0..n)
            .into_par_iter()
            .map(|i| engine.signal(start + i as f64 * step).map(|h| h.counts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(SignalTable { start, step, rows }))
    }

    fn signal(&self, delta: f64) -> Vec<f64> {
        let x = (delta - self.start) / self.step;
        let i = (x.floor() as usize).clamp(1, self.rows.len() - 3);
        let f = x - i as f64;
        let w = [
            0.5 * (-f + 2.0 * f * f - f * f * f),
            0.5 * (2.0 - 5.0 * f * f + 3.0 * f * f * f),
            0.5 * (f + 4.0 * f * f - 3.0 * f * f * f),
            0.5 * (-f * f + f * f * f),
        ];
        (0..self.rows[0].len())
            .map(|b| (0..4).map(|j| w[j] * self.rows[i - 1 + j][b]).sum::<f64>().max(0.0))
            .collect()
    }
}

/// Drive-pulse histograms of the recorded cycles, summed per key.
///
/// Work is split into fixed chunks whose partial sums are merged in chunk
/// order, so the result does not depend on the thread count. Transients are
/// memoized per exact detuning within a chunk, or read from a [`SignalTable`]
/// when there are many cycles.
pub fn accumulate_cycles(
    cfg: &ExperimentConfig,
    records: &[CycleRecord],
    keys: &[usize],
    n_keys: usize,
) -> Result<Vec<TimeHistogram>> {
    if keys.len() != records.len() || keys.iter().any(|&k| k >= n_keys) {
        return Err(Error::invalid("every cycle needs a key below n_keys"));
    }
    let bound = records.iter().fold(0.0f64, |m, r| m.max(r.delta.abs()));
    let engine = TransientEngine::new(cfg, bound)?;
    let table = SignalTable::build_if_worthwhile(&engine, records)?;
    let poisson = cfg.run.sampling == Sampling::Poisson;
    let reps = cfg.program.repetitions_per_repump;
    let dark_total = cfg.reps() * cfg.detector.dark_rate * cfg.detector.bin_width;
    let empty = engine.signal(0.0)?.zeros_like();

    let chunk_sum = |chunk_index: usize| -> Result<Vec<TimeHistogram>> {
        let start = chunk_index * CHUNK;
        let end = (start + CHUNK).min(records.len());
        let mut out = vec![empty.clone(); n_keys];
        let mut memo: HashMap<u64, TimeHistogram> = HashMap::new();
        for c in start..end {
            let rec = &records[c];
            let mut cycle = empty.clone();
            if let Some(table) = &table {
                let signal = table.signal(rec.delta);
                for (h, s) in cycle.counts.iter_mut().zip(signal) {
                    *h += rec.bright_pulses as f64 * s + dark_total;
                }
            } else {
                let signal = match memo.entry(rec.delta.to_bits()) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => e.insert(engine.signal(rec.delta)?),
                };
                add_cycle(&mut cycle, signal, rec.bright_pulses as f64, dark_total);
            }
            if poisson {
                let mut rng = stream_rng(cfg.master_seed, Stream::Drive, c as u64);
                cycle = sample_counts(&cycle, &mut rng)?;
            }
            cycle.n_cycles = reps as u64;
            out[keys[c]].merge(&cycle)?;
        }
        Ok(out)
    };

    let n_chunks = records.len().div_ceil(CHUNK);
    let mut total = vec![empty.clone(); n_keys];
    for batch_start in (0..n_chunks).step_by(BATCH) {
        let batch_end = (batch_start + BATCH).min(n_chunks);
        let parts: Vec<Vec<TimeHistogram>> = (batch_start..batch_end)
            .into_par_iter()
            .map(chunk_sum)
            .collect::<Result<_>>()?;
        for part in parts {
            for (t, p) in total.iter_mut().zip(&part) {
                t.merge(p)?;
            }
        }
    }
    Ok(total)
}

/// Monte Carlo drive-pulse histogram over all cycles.
pub(crate) fn monte_carlo_histogram(cfg: &ExperimentConfig) -> Result<TimeHistogram> {
    let records = environment_pass(cfg)?;
    let keys = vec![0; records.len()];
    Ok(accumulate_cycles(cfg, &records, &keys, 1)?.remove(0))
}

/// MHz list to rad/ns.
pub(crate) fn mhz_list(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| mhz_to_rad_per_ns(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_table_matches_exact_integration() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.span = Some(60.0);
        let step = mhz_to_rad_per_ns(TABLE_STEP_MHZ);
        let records: Vec<CycleRecord> = (0..4000)
            .map(|i| CycleRecord {
                delta: -0.3 + 0.6 * i as f64 / 3999.0,
                n_probe: 0,
                bright_pulses: 1,
            })
            .collect();
        let engine = TransientEngine::new(&cfg, 0.4).unwrap();
        let table = SignalTable::build_if_worthwhile(&engine, &records).unwrap().unwrap();
        assert!((table.step - step).abs() < 1e-15);
        let peak = engine.signal(0.0).unwrap().counts.iter().copied().fold(0.0, f64::max);
        for delta in [-0.3, -0.1234567, 0.0, 0.05, 0.2999] {
            let exact = engine.signal(delta).unwrap();
            for (a, b) in table.signal(delta).iter().zip(&exact.counts) {
                assert!((a - b).abs() < 1e-4 * peak, "{delta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quadrature_weights() {
        let q = spectral_quadrature(&SpectralModel::nv2(), 41);
        assert_eq!(q.len(), 41);
        let total: f64 = q.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let sigma = SpectralModel::nv2().sigma();
        let var: f64 = q.iter().map(|(d, w)| w * d * d).sum();
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.02);
        assert_eq!(spectral_quadrature(&SpectralModel::frozen(), 41), vec![(0.0, 1.0)]);
    }

    #[test]
    fn probe_power_sets_saturation() {
        let cfg = ExperimentConfig::default();
        let p = power_for_saturation(0.1, &cfg.emitter).unwrap();
        let rates = cfg.rates().unwrap();
        let omega = power_to_rabi(p, cfg.emitter.kappa).unwrap();
        let s = crate::bloch::saturation_parameter(omega, 0.0, &rates);
        assert!((s - 0.1).abs() < 1e-12);
    }

    fn small(sampling: Sampling) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.n_cycles = 600;
        cfg.program.repetitions_per_repump = 5;
        cfg.program.probe_duration = 0.0;
        cfg.run.span = Some(40.0);
        cfg.run.sampling = sampling;
        cfg
    }

    #[test]
    fn chunked_accumulation_is_thread_independent() {
        let cfg = small(Sampling::Poisson);
        let a = monte_carlo_histogram(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| monte_carlo_histogram(&cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_cycles, 600 * 5);
        assert!(a.counts.iter().all(|c| c.fract() == 0.0));
    }

    #[test]
    fn frozen_line_monte_carlo_matches_quadrature() {
        let mut cfg = small(Sampling::MonteCarlo);
        cfg.spectral = SpectralModel::frozen();
        cfg.ionization = IonizationModel::disabled();
        let mc = monte_carlo_histogram(&cfg).unwrap();
        let q = quadrature_histogram(&cfg).unwrap();
        for (a, b) in mc.counts.iter().zip(&q.counts) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12));
        }
    }
}
