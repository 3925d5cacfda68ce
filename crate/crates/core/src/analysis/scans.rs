//! Alignment and summation of repeated resonance scans.

use super::lorentzian::fit_lorentzian;
use super::Weighting;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedScans {
    /// Frequency offsets from the line centre; same units as the input axis.
    pub offsets: Vec<f64>,
    /// Sum of centre-shifted scans, normalized to unit area.
    pub shifted: Vec<f64>,
    /// Sum of the raw scans about their mean centre, normalized to unit area.
    pub unshifted: Vec<f64>,
    /// Fitted centre of every scan that was kept.
    pub centers: Vec<f64>,
    /// Scans dropped because their centre fit failed.
    pub excluded: usize,
    /// Histogram of `centers`: edges and counts.
    pub center_edges: Vec<f64>,
    pub center_counts: Vec<u64>,
}

impl AlignedScans {
    pub fn center_mean(&self) -> f64 {
        self.centers.iter().sum::<f64>() / self.centers.len() as f64
    }

    /// Sample standard deviation of the fitted centres.
    pub fn center_std(&self) -> f64 {
        let n = self.centers.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.center_mean();
        (self.centers.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Linear interpolation on an increasing grid, clamped to the end values.
fn interpolate(f: &[f64], y: &[f64], x: f64) -> f64 {
    if x <= f[0] {
        return y[0];
    }
    if x >= f[f.len() - 1] {
        return y[y.len() - 1];
    }
    let k = f.partition_point(|&v| v <= x) - 1;
    let frac = (x - f[k]) / (f[k + 1] - f[k]);
    y[k] + frac * (y[k + 1] - y[k])
}

fn normalize(f: &[f64], y: &mut [f64]) {
    let area: f64 = f
        .windows(2)
        .zip(y.windows(2))
        .map(|(f, y)| 0.5 * (f[1] - f[0]) * (y[0] + y[1]))
        .sum();
    if area != 0.0 {
        y.iter_mut().for_each(|v| *v /= area);
    }
}

/// Fits every scan's centre, shifts the scans onto a common offset grid by
/// linear interpolation and sums them.
///
/// `frequencies` must be strictly increasing and shared by all scans.
pub fn align_and_sum_scans(frequencies: &[f64], scans: &[Vec<f64>]) -> Result<AlignedScans> {
    if frequencies.len() < 5 || frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "scan axis must be strictly increasing with at least 5 points",
        ));
    }
    if scans.iter().any(|s| s.len() != frequencies.len()) {
        return Err(Error::GridMismatch);
    }
    let mut centers = Vec::with_capacity(scans.len());
    let mut kept = Vec::with_capacity(scans.len());
    for scan in scans {
        match fit_lorentzian(frequencies, scan, Weighting::Unweighted) {
            Ok(fit) if fit.converged && !fit.edge_peak => {
                centers.push(fit.center);
                kept.push(scan);
            }
            _ => {}
        }
    }
    if centers.is_empty() {
        return Err(Error::FitFailed("no scan yielded a centre".into()));
    }
    let excluded = scans.len() - centers.len();
    let mid = 0.5 * (frequencies[0] + frequencies[frequencies.len() - 1]);
    let offsets: Vec<f64> = frequencies.iter().map(|f| f - mid).collect();
    let mean_center = centers.iter().sum::<f64>() / centers.len() as f64;

    let mut shifted = vec![0.0; offsets.len()];
    let mut unshifted = vec![0.0; offsets.len()];
    for (scan, center) in kept.iter().zip(&centers) {
        for (i, off) in offsets.iter().enumerate() {
            shifted[i] += interpolate(frequencies, scan, off + center);
            unshifted[i] += interpolate(frequencies, scan, off + mean_center);
        }
    }
    normalize(&offsets, &mut shifted);
    normalize(&offsets, &mut unshifted);

    let lo = centers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_bins = (centers.len() as f64).sqrt().ceil().max(1.0) as usize;
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let center_edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut center_counts = vec![0u64; n_bins];
    for c in &centers {
        let k = (((c - lo) / width) as usize).min(n_bins - 1);
        center_counts[k] += 1;
    }

    Ok(AlignedScans {
        offsets,
        shifted,
        unshifted,
        centers,
        excluded,
        center_edges,
        center_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(f: &[f64], center: f64, fwhm: f64) -> Vec<f64> {
        f.iter()
            .map(|x| 1.0 / (1.0 + ((x - center) / (0.5 * fwhm)).powi(2)))
            .collect()
    }

    #[test]
    fn identical_scans_sum_to_the_single_line() {
        let f: Vec<f64> = (0..201).map(|i| -200.0 + 2.0 * i as f64).collect();
        let one = line(&f, 0.0, 46.0);
        let out = align_and_sum_scans(&f, &vec![one.clone(); 5]).unwrap();
        let mut single = one;
        normalize(&out.offsets, &mut single);
        for (a, b) in out.shifted.iter().zip(&single) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(out.excluded, 0);
        assert_eq!(out.center_counts.iter().sum::<u64>(), 5);
    }

    #[test]
    fn shifting_narrows_the_sum() {
        let f: Vec<f64> = (0..301).map(|i| -300.0 + 2.0 * i as f64).collect();
        let scans: Vec<Vec<f64>> = (0..9).map(|k| line(&f, -40.0 + 10.0 * k as f64, 46.0)).collect();
        let out = align_and_sum_scans(&f, &scans).unwrap();
        let a = fit_lorentzian(&out.offsets, &out.shifted, Weighting::Unweighted).unwrap();
        let b = fit_lorentzian(&out.offsets, &out.unshifted, Weighting::Unweighted).unwrap();
        assert!((a.fwhm / 46.0 - 1.0).abs() < 1e-3);
        assert!(b.fwhm > a.fwhm);
    }

    #[test]
    fn flat_scans_are_excluded() {
        let f: Vec<f64> = (0..101).map(|i| -100.0 + 2.0 * i as f64).collect();
        let scans = vec![line(&f, 0.0, 46.0), vec![1.0; 101]];
        let out = align_and_sum_scans(&f, &scans).unwrap();
        assert_eq!(out.excluded, 1);
        assert_eq!(out.centers.len(), 1);
    }
}
