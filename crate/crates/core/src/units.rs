//! Unit conversions. Internally time is in ns and angular frequency in rad/ns.

use std::f64::consts::TAU;

/// Ratio between the full width at half maximum of a Gaussian and its
/// standard deviation, `2·sqrt(2·ln 2)`.
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Ordinary frequency in MHz to angular frequency in rad/ns.
pub fn mhz_to_rad_per_ns(mhz: f64) -> f64 {
    TAU * mhz * 1e-3
}

/// Angular frequency in rad/ns to ordinary frequency in MHz.
pub fn rad_per_ns_to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

pub fn ns_to_ms(t: f64) -> f64 {
    t * 1e-6
}

pub fn ms_to_ns(t: f64) -> f64 {
    t * 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mhz_round_trip() {
        let w = mhz_to_rad_per_ns(410.0);
        assert!((w - 2.576_105_975_943_63).abs() < 1e-12);
        assert!((rad_per_ns_to_mhz(w) - 410.0).abs() < 1e-10);
    }

    #[test]
    fn fwhm_constant() {
        let expect = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt();
        assert!((GAUSSIAN_FWHM_PER_SIGMA - expect).abs() < 1e-15);
    }
}
