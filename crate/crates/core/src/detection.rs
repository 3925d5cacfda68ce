//! Photon detection: expected and shot-noise-sampled time histograms, and the
//! weak-probe photon counter used as a detuning sensor.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::bloch::{derive_rates, steady_state, EmitterParams, Trajectory};
use crate::pulse::{power_to_rabi, PulseProgram};
use crate::{Error, Result};

/// Time-resolved single-photon counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Histogram bin width, ns.
    pub bin_width: f64,
    /// Detected photons per emitted photon.
    pub efficiency: f64,
    /// Dark counts per ns.
    pub dark_rate: f64,
}

impl DetectorModel {
    /// Efficiency giving ~40 kcounts/s from a saturated emitter with
    /// `T1 = 10.9 ns`.
    pub const DEFAULT_EFFICIENCY: f64 = 4e4 * 2.0 * 10.9e-9;

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::invalid(format!(
                "bin width must be positive, got {}",
                self.bin_width
            )));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::invalid(format!(
                "dark rate must be >= 0, got {}",
                self.dark_rate
            )));
        }
        Ok(())
    }

    /// Ideal detector: unit efficiency, no dark counts.
    pub fn ideal(bin_width: f64) -> Self {
        DetectorModel {
            bin_width,
            efficiency: 1.0,
            dark_rate: 0.0,
        }
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            bin_width: 0.256,
            efficiency: Self::DEFAULT_EFFICIENCY,
            dark_rate: 2e-7,
        }
    }
}

/// Photon counts binned by arrival time relative to the drive-pulse start.
///
/// Counts are expected values (reals) or sampled counts stored as integral
/// `f64`. `n_cycles` is the number of drive pulses accumulated.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<f64>,
    pub n_cycles: u64,
}

impl TimeHistogram {
    pub fn uniform(start: f64, bin_width: f64, n_bins: usize) -> Self {
        let bin_edges = (0..=n_bins).map(|i| start + i as f64 * bin_width).collect();
        TimeHistogram {
            bin_edges,
            counts: vec![0.0; n_bins],
            n_cycles: 0,
        }
    }

    /// Empty histogram on the same grid.
    pub fn zeros_like(&self) -> Self {
        TimeHistogram {
            bin_edges: self.bin_edges.clone(),
            counts: vec![0.0; self.counts.len()],
            n_cycles: 0,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Adds another histogram on the same grid. Associative and commutative
    /// up to floating-point rounding; exact for integral counts.
    pub fn merge(&mut self, other: &TimeHistogram) -> Result<()> {
        if self.bin_edges != other.bin_edges {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_cycles += other.n_cycles;
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> TimeHistogram {
        TimeHistogram {
            bin_edges: self.bin_edges.clone(),
            counts: self.counts.iter().map(|c| c * factor).collect(),
            n_cycles: self.n_cycles,
        }
    }

    /// Bins whose centre lies in `[start, end]`, as `(centre, count)` pairs.
    pub fn window(&self, start: f64, end: f64) -> (Vec<f64>, Vec<f64>) {
        self.bin_centers()
            .into_iter()
            .zip(self.counts.iter().copied())
            .filter(|(t, _)| *t >= start && *t <= end)
            .unzip()
    }

    /// CSV with header `t_ns,counts,n_cycles`; `t_ns` is the bin start.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_ns,counts,n_cycles")?;
        for (t, c) in self.bin_edges.iter().zip(&self.counts) {
            writeln!(out, "{t},{c},{}", self.n_cycles)?;
        }
        Ok(())
    }
}

/// Integral of a piecewise-linear sampled function from `t[0]` to `x`.
struct PiecewiseLinear<'a> {
    t: &'a [f64],
    y: &'a [f64],
    cumulative: Vec<f64>,
}

impl<'a> PiecewiseLinear<'a> {
    fn new(t: &'a [f64], y: &'a [f64]) -> Self {
        let mut cumulative = Vec::with_capacity(t.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 1..t.len() {
            acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
            cumulative.push(acc);
        }
        PiecewiseLinear { t, y, cumulative }
    }

    fn integral_to(&self, x: f64) -> f64 {
        let k = match self.t.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(k) => return self.cumulative[k],
            Err(0) => return 0.0,
            Err(k) if k >= self.t.len() => return self.cumulative[self.t.len() - 1],
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let frac = (x - t0) / (t1 - t0);
        let yx = self.y[k] + frac * (self.y[k + 1] - self.y[k]);
        self.cumulative[k] + 0.5 * (x - t0) * (self.y[k] + yx)
    }
}

/// Expected counts per bin for one drive pulse:
/// `η·γ1·∫_bin ρ_ee dt + dark_rate·bin_width`, with bins starting at `t = 0`
/// and covering `span` ns.
pub fn expected_counts(traj: &Trajectory, det: &DetectorModel, gamma1: f64, span: f64) -> Result<TimeHistogram> {
    det.validate()?;
    let n_bins = (span / det.bin_width + 1e-9).floor() as usize;
    let mut hist = TimeHistogram::uniform(0.0, det.bin_width, n_bins);
    let need_end = hist.bin_edges[n_bins];
    let tol = 1e-9 * need_end.abs().max(1.0);
    if traj.is_empty() || traj.start() > tol || traj.end() < need_end - tol {
        return Err(Error::TrajectoryTooShort {
            start: traj.t_grid.first().copied().unwrap_or(f64::NAN),
            end: traj.t_grid.last().copied().unwrap_or(f64::NAN),
            need_start: 0.0,
            need_end,
        });
    }
    let pl = PiecewiseLinear::new(&traj.t_grid, &traj.rho_ee);
    let scale = det.efficiency * gamma1;
    let dark = det.dark_rate * det.bin_width;
    let mut lower = pl.integral_to(hist.bin_edges[0]);
    for i in 0..n_bins {
        let upper = pl.integral_to(hist.bin_edges[i + 1]);
        hist.counts[i] = scale * (upper - lower) + dark;
        lower = upper;
    }
    hist.n_cycles = 1;
    Ok(hist)
}

/// Poisson draw with the given mean; zero or negative means give zero.
pub fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng)
    } else {
        0.0
    }
}

/// Independent Poisson draw for every bin.
pub fn sample_counts<R: Rng + ?Sized>(expected: &TimeHistogram, rng: &mut R) -> Result<TimeHistogram> {
    if expected.counts.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("expected counts must be finite"));
    }
    let counts = expected.counts.iter().map(|&m| poisson_draw(m, rng)).collect();
    Ok(TimeHistogram {
        bin_edges: expected.bin_edges.clone(),
        counts,
        n_cycles: expected.n_cycles,
    })
}

/// Photon count of one probe interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbeResult {
    pub n_probe: u64,
}

/// Mean probe counts at a given resonance offset:
/// `[η·γ1·ρ_ss(Ω_probe, δ) + dark_rate]·probe_duration`.
pub fn probe_mean(
    delta_offset: f64,
    program: &PulseProgram,
    emitter: &EmitterParams,
    det: &DetectorModel,
) -> Result<f64> {
    if program.probe_duration <= 0.0 {
        return Ok(0.0);
    }
    let rates = derive_rates(emitter)?;
    let omega = power_to_rabi(program.probe_power, emitter.kappa)?;
    let rho = steady_state(omega, delta_offset, &rates);
    Ok((det.efficiency * rates.gamma1 * rho + det.dark_rate) * program.probe_duration)
}

pub fn probe_counts<R: Rng + ?Sized>(
    delta_offset: f64,
    program: &PulseProgram,
    emitter: &EmitterParams,
    det: &DetectorModel,
    rng: &mut R,
) -> Result<ProbeResult> {
    let mean = probe_mean(delta_offset, program, emitter, det)?;
    Ok(ProbeResult {
        n_probe: poisson_draw(mean, rng) as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{integrate_with, BlochState, IntegratorOptions, RateSet};
    use crate::pulse::ConstantEnvelope;
    use crate::rng::{stream_rng, Stream};

    fn flat_traj(value: f64, end: f64) -> Trajectory {
        let t: Vec<f64> = (0..=1000).map(|i| i as f64 * end / 1000.0).collect();
        let n = t.len();
        Trajectory {
            t_grid: t,
            rho_ee: vec![value; n],
            states: vec![BlochState::GROUND; n],
        }
    }

    #[test]
    fn zero_population_gives_zero_counts() {
        let h = expected_counts(&flat_traj(0.0, 10.0), &DetectorModel::ideal(0.256), 0.1, 10.0).unwrap();
        assert_eq!(h.n_bins(), 39);
        assert!(h.counts.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn constant_population_counts() {
        let h = expected_counts(&flat_traj(0.5, 10.0), &DetectorModel::ideal(0.256), 1.0 / 10.9, 10.0).unwrap();
        for c in &h.counts {
            assert!((c - 0.011_743).abs() < 1e-6, "{c}");
        }
    }

    #[test]
    fn dark_counts_only() {
        let det = DetectorModel {
            bin_width: 0.5,
            efficiency: 0.3,
            dark_rate: 0.01,
        };
        let h = expected_counts(&flat_traj(0.0, 10.0), &det, 0.1, 10.0).unwrap();
        assert!(h.counts.iter().all(|&c| (c - 0.005).abs() < 1e-15));
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let err = expected_counts(&flat_traj(0.5, 5.0), &DetectorModel::ideal(0.256), 0.1, 10.0);
        assert!(matches!(err, Err(Error::TrajectoryTooShort { .. })));
    }

    #[test]
    fn tail_counts_conserve_photon_number() {
        let rates = RateSet::new(1.0 / 10.9, 0.5 / 10.9 + 0.1).unwrap();
        let t: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.016).collect();
        let opts = IntegratorOptions {
            initial: BlochState::new(0.0, 0.0, 0.2),
            ..Default::default()
        };
        let traj = integrate_with(&rates, &ConstantEnvelope(0.0), 0.0, 0.0, &t, &opts).unwrap();
        let det = DetectorModel {
            bin_width: 0.256,
            efficiency: 0.7,
            dark_rate: 0.0,
        };
        let span = 0.256 * 250.0;
        let h = expected_counts(&traj, &det, rates.gamma1, span).unwrap();
        let expect = 0.7 * 0.6 * (1.0 - (-span / 10.9f64).exp());
        assert!((h.total() / expect - 1.0).abs() < 1e-3);
    }

    #[test]
    fn poisson_sampling() {
        let mut rng = stream_rng(11, Stream::Auxiliary, 0);
        let mut h = TimeHistogram::uniform(0.0, 1.0, 10_000);
        let zeros = sample_counts(&h, &mut rng).unwrap();
        assert!(zeros.counts.iter().all(|&c| c == 0.0));
        h.counts.iter_mut().for_each(|c| *c = 100.0);
        let s = sample_counts(&h, &mut rng).unwrap();
        let mean = s.total() / 10_000.0;
        assert!((mean - 100.0).abs() < 1.0);
        assert!(s.counts.iter().all(|c| c.fract() == 0.0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut h = TimeHistogram::uniform(0.0, 1.0, 100);
        h.counts.iter_mut().enumerate().for_each(|(i, c)| *c = i as f64 * 0.3);
        let a = sample_counts(&h, &mut stream_rng(5, Stream::Drive, 9)).unwrap();
        let b = sample_counts(&h, &mut stream_rng(5, Stream::Drive, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn merge_adds_counts_and_cycles() {
        let mut a = TimeHistogram::uniform(0.0, 1.0, 3);
        a.counts = vec![1.0, 2.0, 3.0];
        a.n_cycles = 2;
        let mut b = a.clone();
        b.n_cycles = 5;
        a.merge(&b).unwrap();
        assert_eq!(a.counts, vec![2.0, 4.0, 6.0]);
        assert_eq!(a.n_cycles, 7);
        let other_grid = TimeHistogram::uniform(0.0, 0.5, 3);
        assert!(matches!(a.merge(&other_grid), Err(Error::GridMismatch)));
    }

    #[test]
    fn csv_layout() {
        let mut h = TimeHistogram::uniform(0.0, 0.25, 2);
        h.counts = vec![1.5, 0.0];
        h.n_cycles = 3;
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t_ns,counts,n_cycles\n0,1.5,3\n0.25,0,3\n"
        );
    }

    fn probe_setup() -> (PulseProgram, EmitterParams, DetectorModel) {
        let emitter = EmitterParams::new(10.9, 10.0, 0.4).unwrap();
        let program = PulseProgram {
            probe_duration: 2e7,
            probe_power: 0.01,
            ..Default::default()
        };
        let det = DetectorModel {
            dark_rate: 0.0,
            ..Default::default()
        };
        (program, emitter, det)
    }

    #[test]
    fn probe_far_detuned_is_dark_counts() {
        let (program, emitter, _) = probe_setup();
        let det = DetectorModel::default();
        let m = probe_mean(1e9, &program, &emitter, &det).unwrap();
        assert!((m - det.dark_rate * program.probe_duration).abs() < 1e-9);
    }

    #[test]
    fn probe_half_maximum_at_power_broadened_hwhm() {
        let (program, emitter, det) = probe_setup();
        let rates = derive_rates(&emitter).unwrap();
        let omega = power_to_rabi(program.probe_power, emitter.kappa).unwrap();
        let s0 = crate::bloch::saturation_parameter(omega, 0.0, &rates);
        let hwhm = (1.0 + s0).sqrt() * rates.gamma2;
        let on = probe_mean(0.0, &program, &emitter, &det).unwrap();
        let half = probe_mean(hwhm, &program, &emitter, &det).unwrap();
        assert!((on / half - 2.0).abs() < 1e-12);
    }

    #[test]
    fn probe_zero_duration() {
        let (mut program, emitter, det) = probe_setup();
        program.probe_duration = 0.0;
        let mut rng = stream_rng(1, Stream::Probe, 0);
        assert_eq!(
            probe_counts(0.0, &program, &emitter, &det, &mut rng).unwrap().n_probe,
            0
        );
    }
}
