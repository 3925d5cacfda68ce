//! Post-selection on probe counts: drive transients keyed by the number of
//! photons detected during the weak probe that follows every repump.

use super::{accumulate_cycles, environment_pass, ExperimentConfig, Sampling};
use crate::analysis::{fit_damped_cosine, DampedCosineFit};
use crate::detection::TimeHistogram;
use crate::{Error, Result};

/// Drive histograms per `n_probe` bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectionTable {
    /// Lower edge of each `n_probe` bin; bin `k` holds `[edges[k], edges[k+1])`.
    pub probe_bin_edges: Vec<u64>,
    pub histograms: Vec<TimeHistogram>,
}

impl PostSelectionTable {
    /// Sum over all bins.
    pub fn total(&self) -> Result<TimeHistogram> {
        let mut total = self.histograms[0].zeros_like();
        for h in &self.histograms {
            total.merge(h)?;
        }
        Ok(total)
    }
}

#[derive(Debug)]
pub struct Region {
    /// Inclusive lower and exclusive upper `n_probe` bound.
    pub n_probe_range: (u64, u64),
    pub histogram: TimeHistogram,
    /// Fit of the summed transient; an error if the region is empty.
    pub fit: Result<DampedCosineFit>,
}

#[derive(Debug)]
pub struct PostSelectionResult {
    pub table: PostSelectionTable,
    /// `n_probe` of every cycle, in cycle order.
    pub n_probe: Vec<u64>,
    /// Low, intermediate and high `n_probe` regions.
    pub regions: [Region; 3],
    pub all: Region,
}

/// Nearest-rank percentile of a sorted sample.
fn percentile(sorted: &[u64], q: f64) -> u64 {
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Runs the probe-and-drive protocol and splits the data at the configured
/// `n_probe` percentiles. Expected sampling is treated as Monte Carlo: the
/// environment must be drawn to have probe counts at all.
pub fn run_postselection(cfg: &ExperimentConfig) -> Result<PostSelectionResult> {
    cfg.validate()?;
    if cfg.program.probe_duration <= 0.0 {
        return Err(Error::invalid("post-selection needs a probe pulse (probe_ns > 0)"));
    }
    let mut cfg = cfg.clone();
    if cfg.run.sampling == Sampling::Expected {
        cfg.run.sampling = Sampling::MonteCarlo;
    }
    let records = environment_pass(&cfg)?;
    let n_probe: Vec<u64> = records.iter().map(|r| r.n_probe).collect();
    let width = cfg.run.probe_bin;
    let max = n_probe.iter().copied().max().unwrap_or(0);
    let n_keys = (max / width + 1) as usize;
    let keys: Vec<usize> = n_probe.iter().map(|n| (n / width) as usize).collect();
    let histograms = accumulate_cycles(&cfg, &records, &keys, n_keys)?;
    let table = PostSelectionTable {
        probe_bin_edges: (0..=n_keys as u64).map(|k| k * width).collect(),
        histograms,
    };

    let mut sorted = n_probe.clone();
    sorted.sort_unstable();
    let (lo, hi) = cfg.run.region_percentiles;
    let bounds = [0, percentile(&sorted, lo), percentile(&sorted, hi), u64::MAX];
    let window = cfg.fit_window()?;
    let region = |from: u64, to: u64| -> Result<Region> {
        let mut histogram = table.histograms[0].zeros_like();
        for (k, h) in table.histograms.iter().enumerate() {
            let edge = table.probe_bin_edges[k];
            if edge >= from && edge < to {
                histogram.merge(h)?;
            }
        }
        let fit = if histogram.n_cycles == 0 {
            Err(Error::InsufficientData(format!(
                "no cycles with {from} <= n_probe < {to}"
            )))
        } else {
            fit_damped_cosine(&histogram, window, cfg.run.weighting)
        };
        Ok(Region {
            n_probe_range: (from, to),
            histogram,
            fit,
        })
    };
    let regions = [
        region(bounds[0], bounds[1])?,
        region(bounds[1], bounds[2])?,
        region(bounds[2], bounds[3])?,
    ];
    let all = region(0, u64::MAX)?;
    Ok(PostSelectionResult {
        table,
        n_probe,
        regions,
        all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::run_rabi;

    #[test]
    fn percentiles() {
        let s: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&s, 50.0), 50);
        assert_eq!(percentile(&s, 85.0), 85);
        assert_eq!(percentile(&[7], 50.0), 7);
    }

    #[test]
    fn partition_identity_is_bin_exact() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_cycles = 700;
        cfg.program.repetitions_per_repump = 4;
        cfg.run.span = Some(40.0);
        cfg.run.sampling = Sampling::Poisson;
        let post = run_postselection(&cfg).unwrap();
        let rabi = run_rabi(&cfg).unwrap();
        assert_eq!(post.table.total().unwrap(), rabi);
        let regions: u64 = post.regions.iter().map(|r| r.histogram.n_cycles).sum();
        assert_eq!(regions, rabi.n_cycles);
    }

    #[test]
    fn probe_is_required() {
        let mut cfg = ExperimentConfig::default();
        cfg.program.probe_duration = 0.0;
        assert!(run_postselection(&cfg).is_err());
    }
}
