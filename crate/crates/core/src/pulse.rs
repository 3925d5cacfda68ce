//! Drive envelopes and the power-to-Rabi-frequency map.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Fraction of the plateau Rabi amplitude as a function of time since the
/// start of the drive pulse. Values lie in `[0, 1]`.
pub trait Envelope: Sync {
    fn amplitude(&self, t: f64) -> f64;

    /// Left limit of the amplitude at `t`. Differs from
    /// [`amplitude`](Self::amplitude) only at discontinuities.
    fn amplitude_before(&self, t: f64) -> f64 {
        self.amplitude(t)
    }

    /// Times where the envelope has a kink. Integrators place step boundaries
    /// on these.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F> Envelope for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn amplitude(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Constant amplitude for all `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEnvelope(pub f64);

impl Envelope for ConstantEnvelope {
    fn amplitude(&self, _t: f64) -> f64 {
        self.0
    }
}

/// Drive pulse switched on at `t = 0` and off at `t = duration`, each edge
/// filtered by a single-pole (RC) response.
///
/// The rise is `1 − exp(−t/τ_r)` and the fall `a(D)·exp(−(t − D)/τ_f)` with
/// `τ = (10–90 % time)/ln 9`. The asymptotic plateau is exactly 1; with a
/// zero rise time the pulse is an ideal rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedPulse {
    duration: f64,
    tau_rise: f64,
    tau_fall: f64,
}

impl ShapedPulse {
    /// `rise_time` and `fall_time` are 10–90 % transit times, ns.
    pub fn new(duration: f64, rise_time: f64, fall_time: f64) -> Result<Self> {
        for (name, v) in [
            ("duration", duration),
            ("rise_time", rise_time),
            ("fall_time", fall_time),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(ShapedPulse {
            duration,
            tau_rise: rise_time / 9f64.ln(),
            tau_fall: fall_time / 9f64.ln(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn tau_rise(&self) -> f64 {
        self.tau_rise
    }

    pub fn tau_fall(&self) -> f64 {
        self.tau_fall
    }

    /// Time at which the rising edge reaches 99 % of the plateau, ns.
    pub fn rise_end(&self) -> f64 {
        (self.tau_rise * 100f64.ln()).min(self.duration)
    }

    fn rising(&self, t: f64) -> f64 {
        if self.tau_rise == 0.0 {
            1.0
        } else {
            -(-t / self.tau_rise).exp_m1()
        }
    }
}

impl Envelope for ShapedPulse {
    fn amplitude(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t < self.duration {
            self.rising(t)
        } else if self.tau_fall == 0.0 {
            0.0
        } else {
            self.rising(self.duration) * (-(t - self.duration) / self.tau_fall).exp()
        }
    }

    fn amplitude_before(&self, t: f64) -> f64 {
        if t > 0.0 && t <= self.duration {
            self.rising(t)
        } else {
            self.amplitude(t)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, self.duration]
    }
}

/// Timing and power of the repump / probe / drive sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseProgram {
    /// Green repump duration, ns.
    pub green_duration: f64,
    /// Resonant drive pulse duration, ns.
    pub drive_duration: f64,
    /// Dark time after each drive pulse, ns.
    pub off_duration: f64,
    pub repetitions_per_repump: u32,
    /// 10–90 % rise time of the drive, ns.
    pub rise_time: f64,
    /// 10–90 % fall time of the drive, ns.
    pub fall_time: f64,
    /// Weak probe duration, ns; zero disables the probe stage.
    pub probe_duration: f64,
    /// Drive power, μW.
    pub power: f64,
    /// Probe power, μW.
    pub probe_power: f64,
}

impl Default for PulseProgram {
    fn default() -> Self {
        PulseProgram {
            green_duration: 10_000.0,
            drive_duration: 30.0,
            off_duration: 70.0,
            repetitions_per_repump: 1000,
            rise_time: 1.3,
            fall_time: 1.3,
            probe_duration: 0.0,
            power: 38.0,
            probe_power: 0.0,
        }
    }
}

impl PulseProgram {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("green_duration", self.green_duration),
            ("drive_duration", self.drive_duration),
            ("off_duration", self.off_duration),
            ("rise_time", self.rise_time),
            ("fall_time", self.fall_time),
            ("probe_duration", self.probe_duration),
            ("power", self.power),
            ("probe_power", self.probe_power),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.repetitions_per_repump < 1 {
            return Err(Error::invalid("repetitions_per_repump must be at least 1"));
        }
        if self.drive_duration <= self.rise_time {
            return Err(Error::invalid(format!(
                "drive_duration ({}) must exceed rise_time ({}) so the pulse reaches its plateau",
                self.drive_duration, self.rise_time
            )));
        }
        Ok(())
    }

    /// Drive-pulse period, ns.
    pub fn cycle_duration(&self) -> f64 {
        self.drive_duration + self.off_duration
    }
}

pub fn make_envelope(program: &PulseProgram) -> Result<ShapedPulse> {
    program.validate()?;
    ShapedPulse::new(program.drive_duration, program.rise_time, program.fall_time)
}

/// `Ω0 = κ·sqrt(P)`.
pub fn power_to_rabi(power: f64, kappa: f64) -> Result<f64> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::invalid(format!("power must be non-negative, got {power}")));
    }
    Ok(kappa * power.sqrt())
}

/// Inverse of [`power_to_rabi`].
pub fn rabi_to_power(omega0: f64, kappa: f64) -> Result<f64> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::invalid(
            "kappa must be positive to convert a Rabi frequency to power",
        ));
    }
    if !(omega0.is_finite() && omega0 >= 0.0) {
        return Err(Error::invalid(format!("omega0 must be non-negative, got {omega0}")));
    }
    Ok((omega0 / kappa).powi(2))
}

pub fn pi_pulse_duration(omega0: f64) -> Result<f64> {
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::invalid(format!("pi pulse needs omega0 > 0, got {omega0}")));
    }
    Ok(PI / omega0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_rad_per_ns;

    fn crossing(p: &ShapedPulse, level: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, p.duration());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p.amplitude(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ten_ninety_transit_equals_rise_time() {
        let p = ShapedPulse::new(30.0, 1.3, 1.3).unwrap();
        assert_eq!(p.amplitude(0.0), 0.0);
        let dt = crossing(&p, 0.9) - crossing(&p, 0.1);
        assert!((dt - 1.3).abs() < 1e-9, "{dt}");
    }

    #[test]
    fn zero_rise_is_rectangle() {
        let p = ShapedPulse::new(30.0, 0.0, 0.0).unwrap();
        assert_eq!(p.amplitude(-0.1), 0.0);
        assert_eq!(p.amplitude(0.0), 1.0);
        assert_eq!(p.amplitude(29.999), 1.0);
        assert_eq!(p.amplitude(30.0), 0.0);
    }

    #[test]
    fn fall_is_below_one_percent_after_five_time_constants() {
        let p = ShapedPulse::new(30.0, 1.3, 4.0).unwrap();
        let t = 30.0 + 5.0 * p.tau_fall();
        assert!(p.amplitude(t) < 0.01);
        assert!(p.amplitude(t) > 0.0);
    }

    #[test]
    fn envelope_bounded_and_monotone_on_edges() {
        let p = ShapedPulse::new(10.0, 2.0, 3.0).unwrap();
        let mut prev = 0.0;
        for i in 0..1000 {
            let a = p.amplitude(i as f64 * 0.01);
            assert!((0.0..=1.0).contains(&a));
            assert!(a >= prev);
            prev = a;
        }
        prev = p.amplitude(10.0);
        for i in 0..1000 {
            let a = p.amplitude(10.0 + i as f64 * 0.02);
            assert!(a <= prev);
            prev = a;
        }
    }

    #[test]
    fn program_validation() {
        let mut prog = PulseProgram::default();
        assert!(prog.validate().is_ok());
        prog.rise_time = 40.0;
        assert!(prog.validate().is_err());
        let prog = PulseProgram {
            repetitions_per_repump: 0,
            ..Default::default()
        };
        assert!(make_envelope(&prog).is_err());
        let prog = PulseProgram {
            off_duration: -1.0,
            ..Default::default()
        };
        assert!(prog.validate().is_err());
    }

    #[test]
    fn kappa_from_reference_pair() {
        let omega = mhz_to_rad_per_ns(410.0);
        let kappa = omega / 38f64.sqrt();
        assert!((kappa - mhz_to_rad_per_ns(66.5)).abs() < mhz_to_rad_per_ns(0.05));
        assert!((power_to_rabi(38.0, kappa).unwrap() - omega).abs() < 1e-12);
        assert_eq!(power_to_rabi(0.0, kappa).unwrap(), 0.0);
        let full = power_to_rabi(20.0, kappa).unwrap();
        let quarter = power_to_rabi(5.0, kappa).unwrap();
        assert!((full - 2.0 * quarter).abs() < 1e-12);
        assert!(power_to_rabi(-1.0, kappa).is_err());
        assert!((rabi_to_power(omega, kappa).unwrap() - 38.0).abs() < 1e-9);
    }

    #[test]
    fn pi_pulse_examples() {
        let t = pi_pulse_duration(mhz_to_rad_per_ns(410.0)).unwrap();
        assert!((t - 1.22).abs() < 5e-3);
        assert!((pi_pulse_duration(PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((pi_pulse_duration(mhz_to_rad_per_ns(100.0)).unwrap() - 5.0).abs() < 1e-12);
        assert!(pi_pulse_duration(0.0).is_err());
    }
}
