//! The sectioned config file.
//!
//! A TOML document with sections `[emitter]`, `[pulse]`, `[spectral]`,
//! `[ionization]`, `[detector]` and `[run]`. Keys carry their unit in the
//! name (`_ns`, `_MHz`, `_uW`); frequencies are ordinary (not angular) MHz.
//! Unknown keys are rejected and every key has a default, so an empty file
//! is a complete NV2 configuration.
//!
//! ```
//! use nv_optics::config::parse_config;
//!
//! let cfg = parse_config("[emitter]\nt1_ns = 10.9\n").unwrap();
//! assert_eq!(cfg.emitter.t1, 10.9);
//! assert!(parse_config("[spectral]\njump_fwhm_MHz = -3\n").is_err());
//! ```

use serde::{Deserialize, Serialize};

use crate::analysis::Weighting;
use crate::bloch::EmitterParams;
use crate::detection::DetectorModel;
use crate::environment::{IonizationModel, SpectralModel};
use crate::experiments::{
    mhz_list, power_for_saturation, ExperimentConfig, IonizationRun, RunSettings, Sampling, ScanSettings,
};
use crate::pulse::PulseProgram;
use crate::units::mhz_to_rad_per_ns;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitterSection {
    pub t1_ns: f64,
    pub t2_star_ns: f64,
    /// Rabi frequency per √power, MHz/√μW.
    #[serde(rename = "kappa_MHz_per_sqrt_uW")]
    pub kappa_mhz_per_sqrt_uw: f64,
}

impl Default for EmitterSection {
    fn default() -> Self {
        EmitterSection {
            t1_ns: 10.9,
            t2_star_ns: 10.0,
            // 410 MHz at 38 μW.
            kappa_mhz_per_sqrt_uw: 410.0 / 38f64.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    pub green_ns: f64,
    pub drive_ns: f64,
    pub off_ns: f64,
    pub repetitions: u32,
    pub rise_ns: f64,
    pub fall_ns: f64,
    pub probe_ns: f64,
    #[serde(rename = "power_uW")]
    pub power_uw: f64,
    /// Defaults to saturation parameter 0.1 on resonance.
    #[serde(rename = "probe_power_uW", skip_serializing_if = "Option::is_none")]
    pub probe_power_uw: Option<f64>,
}

impl Default for PulseSection {
    fn default() -> Self {
        let p = PulseProgram::default();
        PulseSection {
            green_ns: p.green_duration,
            drive_ns: p.drive_duration,
            off_ns: p.off_duration,
            repetitions: p.repetitions_per_repump,
            rise_ns: p.rise_time,
            fall_ns: p.fall_time,
            probe_ns: 2e7,
            power_uw: p.power,
            probe_power_uw: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    #[serde(rename = "jump_fwhm_MHz")]
    pub jump_fwhm_mhz: f64,
    #[serde(rename = "center_offset_MHz")]
    pub center_offset_mhz: f64,
    /// Defaults to saturation parameter 0.01 on resonance.
    #[serde(rename = "scan_power_uW", skip_serializing_if = "Option::is_none")]
    pub scan_power_uw: Option<f64>,
    /// Half-width of the scanned range.
    #[serde(rename = "scan_span_MHz")]
    pub scan_span_mhz: f64,
    pub scan_points: usize,
    pub scans: usize,
    pub scan_dwell_ns: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection {
            jump_fwhm_mhz: 40.0,
            center_offset_mhz: 0.0,
            scan_power_uw: None,
            scan_span_mhz: 300.0,
            scan_points: 301,
            scans: 200,
            scan_dwell_ns: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IonizationSection {
    /// 1/(ns·μW) per unit excited-state population.
    #[serde(rename = "k_ion_per_ns_uW")]
    pub k_ion: f64,
    pub repump_success: f64,
    pub during_probe: bool,
    #[serde(rename = "powers_uW")]
    pub powers_uw: Vec<f64>,
    pub window_ns: f64,
    pub bins: usize,
    pub emitters: usize,
}

impl Default for IonizationSection {
    fn default() -> Self {
        let m = IonizationModel::default();
        IonizationSection {
            k_ion: m.k_ion,
            repump_success: m.repump_success,
            during_probe: m.during_probe,
            powers_uw: vec![0.5, 1.0, 2.0, 4.0],
            window_ns: 2e8,
            bins: 500,
            emitters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub bin_ns: f64,
    pub efficiency: f64,
    pub dark_per_ns: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorModel::default();
        DetectorSection {
            bin_ns: d.bin_width,
            efficiency: d.efficiency,
            dark_per_ns: d.dark_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingKey {
    #[default]
    None,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Repump cycles; the default depends on the subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u64>,
    pub seed: u64,
    pub sampling: Sampling,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_start_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_end_ns: Option<f64>,
    pub weighting: WeightingKey,
    pub quadrature_nodes: usize,
    #[serde(rename = "powers_uW")]
    pub powers_uw: Vec<f64>,
    #[serde(rename = "detunings_MHz")]
    pub detunings_mhz: Vec<f64>,
    #[serde(rename = "rabi_MHz")]
    pub rabi_mhz: Vec<f64>,
    pub region_percentiles: [f64; 2],
    pub probe_bin: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            cycles: None,
            seed: 1,
            sampling: Sampling::Expected,
            threads: None,
            span_ns: None,
            fit_start_ns: None,
            fit_end_ns: None,
            weighting: WeightingKey::None,
            quadrature_nodes: 41,
            powers_uw: vec![4.7, 19.0, 38.0],
            detunings_mhz: vec![-300.0, -200.0, -100.0, 0.0, 100.0, 200.0, 300.0],
            rabi_mhz: vec![60.0, 80.0, 100.0, 150.0, 200.0, 250.0, 300.0, 400.0, 500.0],
            region_percentiles: [50.0, 85.0],
            probe_bin: 1,
        }
    }
}

/// The config file as written, in file units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDocument {
    pub emitter: EmitterSection,
    pub pulse: PulseSection,
    pub spectral: SpectralSection,
    pub ionization: IonizationSection,
    pub detector: DetectorSection,
    pub run: RunSection,
}

/// Repump cycles when the file leaves `cycles` unset.
pub fn default_cycles(subcommand: Option<&str>) -> u64 {
    match subcommand {
        Some("postselect") => 200_000,
        _ => 1000,
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line where `key` is set inside `[section]`, or 0 if it is not in the file.
fn line_of_key(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return i + 1;
                }
            }
        }
    }
    0
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(0, |s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })
    }

    /// Fills in the derived defaults (probe and scan power, cycle count) so
    /// that the echoed document is complete.
    pub fn resolve(mut self, subcommand: Option<&str>) -> Self {
        self.run.cycles.get_or_insert(default_cycles(subcommand));
        if let Ok(emitter) = self.emitter_params() {
            if self.pulse.probe_power_uw.is_none() {
                self.pulse.probe_power_uw = power_for_saturation(0.1, &emitter).ok();
            }
            if self.spectral.scan_power_uw.is_none() {
                self.spectral.scan_power_uw = power_for_saturation(0.01, &emitter).ok();
            }
        }
        self
    }

    fn emitter_params(&self) -> Result<EmitterParams> {
        EmitterParams::new(
            self.emitter.t1_ns,
            self.emitter.t2_star_ns,
            mhz_to_rad_per_ns(self.emitter.kappa_mhz_per_sqrt_uw),
        )
    }

    /// Converts to internal units and validates. Call [`resolve`](Self::resolve)
    /// first; unresolved derived values are an error.
    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        let (p, s, i, d, r) = (&self.pulse, &self.spectral, &self.ionization, &self.detector, &self.run);
        let unresolved = || Error::invalid("config has unresolved defaults");
        let cfg = ExperimentConfig {
            emitter: self.emitter_params()?,
            program: PulseProgram {
                green_duration: p.green_ns,
                drive_duration: p.drive_ns,
                off_duration: p.off_ns,
                repetitions_per_repump: p.repetitions,
                rise_time: p.rise_ns,
                fall_time: p.fall_ns,
                probe_duration: p.probe_ns,
                power: p.power_uw,
                probe_power: p.probe_power_uw.ok_or_else(unresolved)?,
            },
            spectral: SpectralModel::new(
                mhz_to_rad_per_ns(s.jump_fwhm_mhz),
                mhz_to_rad_per_ns(s.center_offset_mhz),
            )?,
            ionization: IonizationModel {
                k_ion: i.k_ion,
                repump_success: i.repump_success,
                during_probe: i.during_probe,
            },
            detector: DetectorModel {
                bin_width: d.bin_ns,
                efficiency: d.efficiency,
                dark_rate: d.dark_per_ns,
            },
            n_cycles: r.cycles.ok_or_else(unresolved)?,
            master_seed: r.seed,
            run: RunSettings {
                sampling: r.sampling,
                span: r.span_ns,
                fit_window: match (r.fit_start_ns, r.fit_end_ns) {
                    (None, None) => None,
                    (a, b) => {
                        let (lo, hi) = crate::experiments::default_fit_window(p.drive_ns, p.rise_ns);
                        Some((a.unwrap_or(lo), b.unwrap_or(hi)))
                    }
                },
                weighting: match r.weighting {
                    WeightingKey::None => Weighting::Unweighted,
                    WeightingKey::Poisson => Weighting::Poisson,
                },
                quadrature_nodes: r.quadrature_nodes,
                powers: r.powers_uw.clone(),
                deltas: mhz_list(&r.detunings_mhz),
                omegas: mhz_list(&r.rabi_mhz),
                region_percentiles: (r.region_percentiles[0], r.region_percentiles[1]),
                probe_bin: r.probe_bin,
            },
            scan: ScanSettings {
                power: s.scan_power_uw.ok_or_else(unresolved)?,
                half_span: mhz_to_rad_per_ns(s.scan_span_mhz),
                points: s.scan_points,
                n_scans: s.scans,
                dwell: s.scan_dwell_ns,
            },
            ionization_run: IonizationRun {
                powers: i.powers_uw.clone(),
                window: i.window_ns,
                bins: i.bins,
                emitters: i.emitters,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Per-key range checks, reported at the offending line of `text`.
    fn check_keys(&self, text: &str) -> Result<()> {
        let fail = |section: &str, key: &str, message: String| Error::Config {
            line: line_of_key(text, section, key),
            message: format!("[{section}] {key}: {message}"),
        };
        let positive = |section: &str, key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(fail(section, key, format!("must be > 0, got {v}")))
            }
        };
        let non_negative = |section: &str, key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(fail(section, key, format!("must be >= 0, got {v}")))
            }
        };
        let fraction = |section: &str, key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(fail(section, key, format!("must lie in [0, 1], got {v}")))
            }
        };
        let (e, p, s, i, d, r) = (
            &self.emitter,
            &self.pulse,
            &self.spectral,
            &self.ionization,
            &self.detector,
            &self.run,
        );
        positive("emitter", "t1_ns", e.t1_ns)?;
        positive("emitter", "t2_star_ns", e.t2_star_ns)?;
        non_negative("emitter", "kappa_MHz_per_sqrt_uW", e.kappa_mhz_per_sqrt_uw)?;
        for (k, v) in [
            ("green_ns", p.green_ns),
            ("off_ns", p.off_ns),
            ("rise_ns", p.rise_ns),
            ("fall_ns", p.fall_ns),
            ("probe_ns", p.probe_ns),
            ("power_uW", p.power_uw),
        ] {
            non_negative("pulse", k, v)?;
        }
        positive("pulse", "drive_ns", p.drive_ns)?;
        if p.drive_ns <= p.rise_ns {
            return Err(fail(
                "pulse",
                "drive_ns",
                format!("must exceed rise_ns ({})", p.rise_ns),
            ));
        }
        if p.repetitions < 1 {
            return Err(fail("pulse", "repetitions", "must be at least 1".into()));
        }
        if let Some(v) = p.probe_power_uw {
            non_negative("pulse", "probe_power_uW", v)?;
        }
        non_negative("spectral", "jump_fwhm_MHz", s.jump_fwhm_mhz)?;
        if !s.center_offset_mhz.is_finite() {
            return Err(fail("spectral", "center_offset_MHz", "must be finite".into()));
        }
        if let Some(v) = s.scan_power_uw {
            non_negative("spectral", "scan_power_uW", v)?;
        }
        positive("spectral", "scan_span_MHz", s.scan_span_mhz)?;
        positive("spectral", "scan_dwell_ns", s.scan_dwell_ns)?;
        if s.scan_points < 5 {
            return Err(fail("spectral", "scan_points", "must be at least 5".into()));
        }
        if s.scans < 1 {
            return Err(fail("spectral", "scans", "must be at least 1".into()));
        }
        non_negative("ionization", "k_ion_per_ns_uW", i.k_ion)?;
        fraction("ionization", "repump_success", i.repump_success)?;
        for v in &i.powers_uw {
            non_negative("ionization", "powers_uW", *v)?;
        }
        positive("ionization", "window_ns", i.window_ns)?;
        if i.bins < 4 {
            return Err(fail("ionization", "bins", "must be at least 4".into()));
        }
        if i.emitters < 1 {
            return Err(fail("ionization", "emitters", "must be at least 1".into()));
        }
        positive("detector", "bin_ns", d.bin_ns)?;
        fraction("detector", "efficiency", d.efficiency)?;
        non_negative("detector", "dark_per_ns", d.dark_per_ns)?;
        if r.cycles == Some(0) {
            return Err(fail("run", "cycles", "must be at least 1".into()));
        }
        if r.threads == Some(0) {
            return Err(fail("run", "threads", "must be at least 1".into()));
        }
        if let Some(v) = r.span_ns {
            if !(v.is_finite() && v >= d.bin_ns) {
                return Err(fail("run", "span_ns", format!("must cover at least one bin, got {v}")));
            }
        }
        for (k, v) in [("fit_start_ns", r.fit_start_ns), ("fit_end_ns", r.fit_end_ns)] {
            if let Some(v) = v {
                non_negative("run", k, v)?;
            }
        }
        if let (Some(a), Some(b)) = (r.fit_start_ns, r.fit_end_ns) {
            if b <= a {
                return Err(fail("run", "fit_end_ns", format!("must exceed fit_start_ns ({a})")));
            }
        }
        if r.quadrature_nodes < 1 {
            return Err(fail("run", "quadrature_nodes", "must be at least 1".into()));
        }
        for v in &r.powers_uw {
            non_negative("run", "powers_uW", *v)?;
        }
        for v in &r.detunings_mhz {
            if !v.is_finite() {
                return Err(fail("run", "detunings_MHz", "must be finite".into()));
            }
        }
        for v in &r.rabi_mhz {
            positive("run", "rabi_MHz", *v)?;
        }
        let [lo, hi] = r.region_percentiles;
        if !(0.0 < lo && lo < hi && hi < 100.0) {
            return Err(fail("run", "region_percentiles", format!("need 0 < {lo} < {hi} < 100")));
        }
        if r.probe_bin < 1 {
            return Err(fail("run", "probe_bin", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses, range-checks and resolves `text`.
    pub fn load(text: &str, subcommand: Option<&str>) -> Result<Self> {
        let doc = ConfigDocument::parse(text)?;
        doc.check_keys(text)?;
        let doc = doc.resolve(subcommand);
        doc.to_experiment().map_err(|e| match e {
            Error::InvalidParameter(message) => Error::Config { line: 0, message },
            other => other,
        })?;
        Ok(doc)
    }

    /// The document as TOML; parsing it back gives an identical document.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses a config file into a validated [`ExperimentConfig`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ConfigDocument::load(text, None)?.to_experiment()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.emitter.t1, 10.9);
        assert_eq!(cfg.spectral, SpectralModel::nv2());
        assert!((crate::units::rad_per_ns_to_mhz(cfg.emitter.kappa) * 38f64.sqrt() - 410.0).abs() < 1e-9);
    }

    #[test]
    fn values_round_trip() {
        let cfg = parse_config("[emitter]\nt1_ns = 10.9\n[run]\nsampling = \"poisson\"\ncycles = 7\n").unwrap();
        assert_eq!(cfg.emitter.t1, 10.9);
        assert_eq!(cfg.run.sampling, Sampling::Poisson);
        assert_eq!(cfg.n_cycles, 7);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("# comment\n[spectral]\njump_fwhm_MHz = -3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        let err = parse_config("[emitter]\nt1_ns = 10.9\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        let err = parse_config("[pulse]\n\ndrive_ns = \"long\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        assert!(err.is_usage_error());
    }

    #[test]
    fn echo_round_trips_exactly() {
        let text = "[pulse]\npower_uW = 4.7\n[run]\ndetunings_MHz = [0, 100.5]\nseed = 99\n";
        let doc = ConfigDocument::load(text, Some("rabi")).unwrap();
        let again = ConfigDocument::load(&doc.to_toml(), Some("rabi")).unwrap();
        assert_eq!(doc, again);
        assert_eq!(again.pulse.probe_power_uw, doc.pulse.probe_power_uw);
    }

    #[test]
    fn subcommand_cycle_defaults() {
        assert_eq!(
            ConfigDocument::load("", Some("postselect")).unwrap().run.cycles,
            Some(200_000)
        );
        assert_eq!(
            ConfigDocument::load("[run]\ncycles = 5", Some("postselect"))
                .unwrap()
                .run
                .cycles,
            Some(5)
        );
    }
}
