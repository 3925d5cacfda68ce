//! Fluctuating environment of the emitter: spectral jumps at every repump,
//! photo-ionization under resonant drive, and charge-state bookkeeping.
//!
//! Between repumps the spectral offset is frozen; each green pulse redraws it
//! from a Gaussian. Ionization is a two-photon process out of the excited
//! state, so its rate is `k_ion · P · ρ_ee`, which is linear in power once the
//! transition saturates.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::units::{mhz_to_rad_per_ns, GAUSSIAN_FWHM_PER_SIGMA};
use crate::{Error, Result};

/// Distribution of the resonance offset after a repump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralModel {
    /// FWHM of the Gaussian jump distribution, rad/ns.
    pub jump_fwhm: f64,
    /// Mean offset, rad/ns.
    pub center_offset: f64,
}

impl SpectralModel {
    pub fn new(jump_fwhm: f64, center_offset: f64) -> Result<Self> {
        let model = SpectralModel {
            jump_fwhm,
            center_offset,
        };
        model.validate()?;
        Ok(model)
    }

    /// Narrow-jump centre: FWHM 2π·40 MHz.
    pub fn nv2() -> Self {
        SpectralModel {
            jump_fwhm: mhz_to_rad_per_ns(40.0),
            center_offset: 0.0,
        }
    }

    /// Wide-jump centre, twice the NV2 range.
    pub fn nv1() -> Self {
        SpectralModel {
            jump_fwhm: mhz_to_rad_per_ns(80.0),
            center_offset: 0.0,
        }
    }

    pub fn frozen() -> Self {
        SpectralModel {
            jump_fwhm: 0.0,
            center_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jump_fwhm.is_finite() && self.jump_fwhm >= 0.0) {
            return Err(Error::invalid(format!(
                "jump FWHM must be >= 0, got {}",
                self.jump_fwhm
            )));
        }
        if !self.center_offset.is_finite() {
            return Err(Error::invalid("center offset must be finite"));
        }
        Ok(())
    }

    /// Standard deviation of the jump distribution, rad/ns.
    pub fn sigma(&self) -> f64 {
        self.jump_fwhm / GAUSSIAN_FWHM_PER_SIGMA
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sigma = self.sigma();
        if sigma == 0.0 {
            return self.center_offset;
        }
        let normal = Normal::new(self.center_offset, sigma).expect("sigma validated");
        normal.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonizationModel {
    /// Ionization coefficient, 1/(ns·μW) per unit excited-state population.
    pub k_ion: f64,
    /// Probability that a green pulse restores the negative charge state.
    pub repump_success: f64,
    /// Whether ionization is also simulated during the weak probe.
    pub during_probe: bool,
}

impl Default for IonizationModel {
    fn default() -> Self {
        IonizationModel {
            k_ion: 1e-7,
            repump_success: 1.0,
            during_probe: true,
        }
    }
}

impl IonizationModel {
    pub fn disabled() -> Self {
        IonizationModel {
            k_ion: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_ion.is_finite() && self.k_ion >= 0.0) {
            return Err(Error::invalid(format!("k_ion must be >= 0, got {}", self.k_ion)));
        }
        if !(0.0..=1.0).contains(&self.repump_success) {
            return Err(Error::invalid(format!(
                "repump_success must lie in [0, 1], got {}",
                self.repump_success
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChargeState {
    /// NV⁻: optically active.
    Negative,
    /// Dark until the next successful repump.
    Ionized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentState {
    /// Current resonance offset from nominal, rad/ns.
    pub delta_offset: f64,
    pub charge: ChargeState,
}

impl EnvironmentState {
    pub fn new(delta_offset: f64) -> Self {
        EnvironmentState {
            delta_offset,
            charge: ChargeState::Negative,
        }
    }

    pub fn is_bright(&self) -> bool {
        self.charge == ChargeState::Negative
    }
}

impl Default for EnvironmentState {
    fn default() -> Self {
        EnvironmentState::new(0.0)
    }
}

/// Green repump: recharge with probability `repump_success` (otherwise the
/// charge is unchanged) and redraw the spectral offset.
pub fn apply_repump<R: Rng + ?Sized>(
    state: EnvironmentState,
    model: &SpectralModel,
    ion: &IonizationModel,
    rng: &mut R,
) -> EnvironmentState {
    let recharged = ion.repump_success >= 1.0 || rng.random::<f64>() < ion.repump_success;
    let charge = if recharged { ChargeState::Negative } else { state.charge };
    EnvironmentState {
        delta_offset: model.sample(rng),
        charge,
    }
}

/// `Γ = k_ion · P · ρ_ee`, 1/ns.
pub fn ionization_rate(power: f64, rho_ee: f64, ion: &IonizationModel) -> f64 {
    ion.k_ion * power * rho_ee
}

/// Probability of surviving `duration` ns at constant `rate`.
pub fn survival_probability(rate: f64, duration: f64) -> f64 {
    (-rate * duration).exp()
}

/// One interval of constant ionization rate. Ionized is absorbing.
pub fn survive_interval<R: Rng + ?Sized>(
    state: EnvironmentState,
    rate: f64,
    duration: f64,
    rng: &mut R,
) -> EnvironmentState {
    if state.charge == ChargeState::Ionized || rate <= 0.0 || duration <= 0.0 {
        return state;
    }
    let flip = -(-rate * duration).exp_m1();
    if rng.random::<f64>() < flip {
        EnvironmentState {
            charge: ChargeState::Ionized,
            ..state
        }
    } else {
        state
    }
}

/// Time until ionization at constant `rate`, ns (infinite for zero rate).
pub fn ionization_time<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    // 1 - U lies in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

/// Number of consecutive intervals of length `duration` survived out of
/// `repetitions`, with a single exponential draw. Distributed exactly like
/// chaining [`survive_interval`] `repetitions` times.
pub fn intervals_survived<R: Rng + ?Sized>(rate: f64, duration: f64, repetitions: u32, rng: &mut R) -> u32 {
    if rate <= 0.0 || duration <= 0.0 {
        return repetitions;
    }
    let t = ionization_time(rate, rng);
    let whole = (t / duration).floor();
    if whole >= repetitions as f64 {
        repetitions
    } else {
        whole as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{derive_rates, steady_state, EmitterParams};
    use crate::pulse::power_to_rabi;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn frozen_spectrum_always_returns_center() {
        let model = SpectralModel::new(0.0, 0.25).unwrap();
        let ion = IonizationModel::default();
        let mut rng = stream_rng(1, Stream::Auxiliary, 0);
        let mut st = EnvironmentState::default();
        for _ in 0..100 {
            st = apply_repump(st, &model, &ion, &mut rng);
            assert_eq!(st.delta_offset, 0.25);
        }
    }

    #[test]
    fn jump_spread_matches_fwhm() {
        let model = SpectralModel::nv2();
        let ion = IonizationModel::default();
        let mut rng = stream_rng(2, Stream::Auxiliary, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| apply_repump(EnvironmentState::default(), &model, &ion, &mut rng).delta_offset)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let expect = mhz_to_rad_per_ns(16.99);
        assert!((sd / expect - 1.0).abs() < 0.01, "sd {sd} vs {expect}");
    }

    #[test]
    fn jumps_are_uncorrelated() {
        let model = SpectralModel::nv1();
        let ion = IonizationModel::default();
        let mut rng = stream_rng(3, Stream::Auxiliary, 0);
        let mut st = EnvironmentState::default();
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                st = apply_repump(st, &model, &ion, &mut rng);
                st.delta_offset
            })
            .collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        for lag in 1..5 {
            let c = xs
                .windows(lag + 1)
                .map(|w| (w[0] - mean) * (w[lag] - mean))
                .sum::<f64>()
                / ((n - lag as f64) * var);
            assert!(c.abs() < 3.0 / n.sqrt(), "lag {lag}: {c}");
        }
    }

    #[test]
    fn repump_recharges() {
        let ion = IonizationModel::default();
        let mut rng = stream_rng(4, Stream::Auxiliary, 0);
        let st = EnvironmentState {
            delta_offset: 0.0,
            charge: ChargeState::Ionized,
        };
        let st = apply_repump(st, &SpectralModel::nv2(), &ion, &mut rng);
        assert_eq!(st.charge, ChargeState::Negative);

        let never = IonizationModel {
            repump_success: 0.0,
            ..Default::default()
        };
        let st = EnvironmentState {
            delta_offset: 0.0,
            charge: ChargeState::Ionized,
        };
        let st = apply_repump(st, &SpectralModel::nv2(), &never, &mut rng);
        assert_eq!(st.charge, ChargeState::Ionized);
    }

    #[test]
    fn ionization_rate_examples() {
        let ion = IonizationModel {
            k_ion: 2e-7,
            ..Default::default()
        };
        assert_eq!(ionization_rate(0.0, 0.5, &ion), 0.0);
        assert_eq!(ionization_rate(10.0, 0.0, &ion), 0.0);

        let emitter = EmitterParams::new(10.9, 10.0, mhz_to_rad_per_ns(66.5)).unwrap();
        let rates = derive_rates(&emitter).unwrap();
        let rho = |p: f64| steady_state(power_to_rabi(p, emitter.kappa).unwrap(), 0.0, &rates);
        let g1 = ionization_rate(20.0, rho(20.0), &ion);
        let g2 = ionization_rate(40.0, rho(40.0), &ion);
        assert!((g2 / g1 / 2.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn survive_interval_examples() {
        let mut rng = stream_rng(5, Stream::Auxiliary, 0);
        let st = EnvironmentState::default();
        assert_eq!(survive_interval(st, 0.0, 1e9, &mut rng), st);

        let ionized = EnvironmentState {
            charge: ChargeState::Ionized,
            ..st
        };
        assert_eq!(survive_interval(ionized, 1.0, 1.0, &mut rng), ionized);

        let n = 100_000;
        let flipped = (0..n)
            .filter(|_| survive_interval(st, std::f64::consts::LN_2, 1.0, &mut rng).charge == ChargeState::Ionized)
            .count();
        let p = flipped as f64 / n as f64;
        assert!((p - 0.5).abs() < 0.005, "{p}");
    }

    #[test]
    fn intervals_survived_matches_geometric_law() {
        let mut rng = stream_rng(6, Stream::Auxiliary, 0);
        let (rate, dur, reps) = (0.01, 10.0, 20u32);
        let n = 50_000;
        let mean = (0..n)
            .map(|_| intervals_survived(rate, dur, reps, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        let q = survival_probability(rate, dur);
        // E[min(K, R)] for K geometric with survival q per interval
        let expect = q * (1.0 - q.powi(reps as i32)) / (1.0 - q);
        assert!((mean - expect).abs() < 0.1, "{mean} vs {expect}");
        assert_eq!(intervals_survived(0.0, dur, reps, &mut rng), reps);
    }
}
