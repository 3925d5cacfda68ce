//! Series of slow resonance scans, each after a fresh repump.

use super::{ExperimentConfig, Sampling};
use crate::bloch::steady_state;
use crate::detection::poisson_draw;
use crate::pulse::power_to_rabi;
use crate::rng::{stream_rng, Stream};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSeries {
    /// Laser detuning from the nominal line centre, rad/ns.
    pub frequencies: Vec<f64>,
    /// Counts per scan point, one row per scan.
    pub scans: Vec<Vec<f64>>,
    /// Resonance offset drawn at each scan's repump, rad/ns.
    pub offsets: Vec<f64>,
}

/// Each scan: repump (new spectral offset), then steady-state fluorescence
/// across the swept laser frequency. Shot noise in Poisson mode only; the
/// offsets are always drawn.
pub fn run_resonance_scan_series(cfg: &ExperimentConfig) -> Result<ScanSeries> {
    cfg.validate()?;
    let s = &cfg.scan;
    let rates = cfg.rates()?;
    let omega = power_to_rabi(s.power, cfg.emitter.kappa)?;
    let det = &cfg.detector;
    let frequencies: Vec<f64> = (0..s.points)
        .map(|i| -s.half_span + 2.0 * s.half_span * i as f64 / (s.points - 1) as f64)
        .collect();
    let mut scans = Vec::with_capacity(s.n_scans);
    let mut offsets = Vec::with_capacity(s.n_scans);
    for k in 0..s.n_scans {
        let mut rng = stream_rng(cfg.master_seed, Stream::Scan, k as u64);
        let offset = cfg.spectral.sample(&mut rng);
        let scan = frequencies
            .iter()
            .map(|&f| {
                let rate = det.efficiency * rates.gamma1 * steady_state(omega, f - offset, &rates) + det.dark_rate;
                let mean = rate * s.dwell;
                if cfg.run.sampling == Sampling::Poisson {
                    poisson_draw(mean, &mut rng)
                } else {
                    mean
                }
            })
            .collect();
        scans.push(scan);
        offsets.push(offset);
    }
    Ok(ScanSeries {
        frequencies,
        scans,
        offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_lorentzian, Weighting};
    use crate::environment::SpectralModel;

    #[test]
    fn frozen_line_scans_are_identical() {
        let mut cfg = ExperimentConfig::default();
        cfg.spectral = SpectralModel::frozen();
        cfg.scan.n_scans = 5;
        let series = run_resonance_scan_series(&cfg).unwrap();
        for scan in &series.scans {
            assert_eq!(scan, &series.scans[0]);
        }
        let fit = fit_lorentzian(&series.frequencies, &series.scans[0], Weighting::Unweighted).unwrap();
        assert!(fit.center.abs() < 1e-6);
    }
}
