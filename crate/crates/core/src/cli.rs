//! Command-line front end.
//!
//! Every output CSV starts with a `#` header: `## ` lines name the tool and
//! subcommand, and `# ` lines echo the fully resolved config. Stripping the
//! `# ` prefixes (see [`config_from_header`]) gives a config file that
//! reproduces the output exactly.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    align_and_sum_scans, damped_cosine_rows, failed_rows, fit_lorentzian, lorentzian_rows, write_fit_csv,
    DampedCosineFit, FitRow, Weighting,
};
use crate::config::ConfigDocument;
use crate::detection::TimeHistogram;
use crate::experiments::{
    run_damping_sweep, run_detuning_sweep, run_ionization, run_postselection, run_power_sweep, run_rabi,
    run_resonance_scan_series, run_spectral_average, ExperimentConfig, Sampling,
};
use crate::selftest::run_selftest;
use crate::units::rad_per_ns_to_mhz;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "nv-optics",
    version,
    about = "Optical Rabi oscillations of a two-level emitter: simulate, sample, fit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file (TOML sections [emitter] [pulse] [spectral] [ionization] [detector] [run]).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides [run] seed. At most 2^63 - 1 (a TOML integer).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// Output CSV; secondary files are written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Repump cycles; overrides [run] cycles.
    #[arg(long, global = true)]
    pub cycles: Option<u64>,
    /// Overrides [run] sampling.
    #[arg(long, global = true, value_enum)]
    pub sampling: Option<Sampling>,
    /// Worker threads (default: all cores). Does not change results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Drive-pulse fluorescence histogram and damped-cosine fit.
    Rabi,
    /// Fitted Rabi frequency against drive power ([run] powers_uW).
    PowerSweep,
    /// Transients and fits against detuning ([run] detunings_MHz).
    DetuningSweep,
    /// Spectrally averaged transient next to the frozen-line transient.
    SpectralAverage,
    /// Fitted damping constant against Rabi frequency ([run] rabi_MHz).
    DampingSweep,
    /// Resonance scans after repeated repumps, aligned and summed.
    ScanSeries,
    /// Fluorescence bleaching and ionization rate against power.
    Ionization,
    /// Drive transients keyed by probe counts, summed in three regions.
    Postselect,
    /// Oracle and invariant checks.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rabi => "rabi",
            Command::PowerSweep => "power-sweep",
            Command::DetuningSweep => "detuning-sweep",
            Command::SpectralAverage => "spectral-average",
            Command::DampingSweep => "damping-sweep",
            Command::ScanSeries => "scan-series",
            Command::Ionization => "ionization",
            Command::Postselect => "postselect",
            Command::Selftest => "selftest",
        }
    }
}

/// Exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Recovers the config file from an output header.
pub fn config_from_header(csv: &str) -> String {
    let mut out = String::new();
    for line in csv.lines().take_while(|l| l.starts_with('#')) {
        if line.starts_with("##") {
            continue;
        }
        let body = line.strip_prefix("# ").unwrap_or(&line[1..]);
        out.push_str(body);
        out.push('\n');
    }
    out
}

/// Subcommand named in an output header.
pub fn subcommand_from_header(csv: &str) -> Option<&str> {
    csv.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("## subcommand: "))
}

fn header(doc: &ConfigDocument, command: Command) -> String {
    let mut h = format!(
        "## nv-optics {}\n## subcommand: {}\n",
        env!("CARGO_PKG_VERSION"),
        command.name()
    );
    for line in doc.to_toml().lines() {
        if line.is_empty() {
            h.push_str("#\n");
        } else {
            h.push_str("# ");
            h.push_str(line);
            h.push('\n');
        }
    }
    h
}

/// Writes output files with the provenance header.
struct Outputs {
    main: PathBuf,
    header: String,
}

impl Outputs {
    fn sibling(&self, suffix: &str) -> PathBuf {
        let stem = self
            .main
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.main.with_file_name(format!("{stem}.{suffix}.csv"))
    }

    fn write(&self, path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.header.as_bytes())?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn main(&self, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        self.write(&self.main, body)
    }

    fn fits(&self, rows: &[FitRow]) -> Result<()> {
        self.write(&self.sibling("fits"), |w| write_fit_csv(rows, w))
    }
}

const COSINE_PARAMS: [&str; 5] = ["omega_MHz", "tau_ns", "t0_ns", "amplitude", "offset"];

/// Rows for a fit outcome; failures are reported on stderr and counted.
fn cosine_rows(model: &str, fit: &Result<DampedCosineFit>, failures: &mut usize) -> Vec<FitRow> {
    match fit {
        Ok(f) => damped_cosine_rows(model, f),
        Err(e) => {
            eprintln!("{model}: fit failed: {e}");
            *failures += 1;
            failed_rows(model, &COSINE_PARAMS)
        }
    }
}

fn histogram_csv(h: &TimeHistogram) -> impl FnOnce(&mut dyn Write) -> Result<()> + '_ {
    move |w| h.write_csv(w)
}

fn mhz(v: f64) -> f64 {
    rad_per_ns_to_mhz(v)
}

/// Runs one subcommand; returns the number of failed fits.
fn dispatch(command: Command, cfg: &ExperimentConfig, out: &Outputs) -> Result<usize> {
    let mut failures = 0;
    match command {
        Command::Rabi => {
            let h = run_rabi(cfg)?;
            out.main(histogram_csv(&h))?;
            let fit = crate::analysis::fit_damped_cosine(&h, cfg.fit_window()?, cfg.run.weighting);
            out.fits(&cosine_rows("rabi", &fit, &mut failures))?;
        }
        Command::SpectralAverage => {
            let r = run_spectral_average(cfg)?;
            out.main(histogram_csv(&r.averaged))?;
            out.write(&out.sibling("single"), histogram_csv(&r.single))?;
            let mut rows = cosine_rows("averaged", &r.averaged_fit, &mut failures);
            rows.extend(cosine_rows("single", &r.single_fit, &mut failures));
            out.fits(&rows)?;
        }
        Command::PowerSweep => {
            let r = run_power_sweep(cfg, &cfg.run.powers)?;
            let mut rows = Vec::new();
            out.main(|w| {
                writeln!(w, "power_uW,omega_MHz,amplitude")?;
                for (p, fit) in &r.points {
                    let (om, a) = fit
                        .as_ref()
                        .map_or((f64::NAN, f64::NAN), |f| (mhz(f.omega), f.amplitude_at_zero()));
                    writeln!(w, "{p},{om},{a}")?;
                }
                Ok(())
            })?;
            for (p, fit) in &r.points {
                rows.extend(cosine_rows(&format!("power[{p}]"), fit, &mut failures));
            }
            match &r.sqrt_law {
                Ok(f) => {
                    rows.push(FitRow::new(
                        "sqrt_law",
                        "kappa_MHz_per_sqrt_uW",
                        mhz(f.slope),
                        mhz(f.slope_stderr),
                        true,
                    ));
                    rows.push(FitRow::new("sqrt_law", "r_squared", f.r_squared, f64::NAN, !f.flagged));
                }
                Err(e) => {
                    eprintln!("sqrt_law: fit failed: {e}");
                    failures += 1;
                    rows.extend(failed_rows("sqrt_law", &["kappa_MHz_per_sqrt_uW", "r_squared"]));
                }
            }
            out.fits(&rows)?;
        }
        Command::DetuningSweep => {
            let rows_in = run_detuning_sweep(cfg, &cfg.run.deltas)?;
            out.main(|w| {
                writeln!(w, "delta_MHz,omega_MHz,amplitude")?;
                for r in &rows_in {
                    let (om, a) = r
                        .fit
                        .as_ref()
                        .map_or((f64::NAN, f64::NAN), |f| (mhz(f.omega), f.amplitude_at_zero()));
                    writeln!(w, "{},{om},{a}", mhz(r.delta))?;
                }
                Ok(())
            })?;
            out.write(&out.sibling("transients"), |w| {
                writeln!(w, "delta_MHz,t_ns,counts,n_cycles")?;
                for r in &rows_in {
                    for (t, c) in r.transient.bin_edges.iter().zip(&r.transient.counts) {
                        writeln!(w, "{},{t},{c},{}", mhz(r.delta), r.transient.n_cycles)?;
                    }
                }
                Ok(())
            })?;
            let mut rows = Vec::new();
            for r in &rows_in {
                rows.extend(cosine_rows(&format!("delta[{}]", mhz(r.delta)), &r.fit, &mut failures));
            }
            out.fits(&rows)?;
        }
        Command::DampingSweep => {
            let points = run_damping_sweep(cfg, &cfg.run.omegas)?;
            out.main(|w| {
                writeln!(w, "omega_MHz,tau_ns,tau_stderr_ns,drive_ns")?;
                for p in &points {
                    let (tau, err) = p.fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.tau, f.stderr[1]));
                    writeln!(w, "{},{tau},{err},{}", mhz(p.omega), p.drive_duration)?;
                }
                Ok(())
            })?;
            let mut rows = Vec::new();
            for p in &points {
                rows.extend(cosine_rows(&format!("rabi[{}]", mhz(p.omega)), &p.fit, &mut failures));
            }
            out.fits(&rows)?;
        }
        Command::ScanSeries => {
            let series = run_resonance_scan_series(cfg)?;
            let f_mhz: Vec<f64> = series.frequencies.iter().map(|&f| mhz(f)).collect();
            out.main(|w| {
                writeln!(w, "scan,delta_MHz,counts")?;
                for (k, scan) in series.scans.iter().enumerate() {
                    for (f, c) in f_mhz.iter().zip(scan) {
                        writeln!(w, "{k},{f},{c}")?;
                    }
                }
                Ok(())
            })?;
            let mut rows = Vec::new();
            for (k, scan) in series.scans.iter().enumerate() {
                let model = format!("scan[{k}]");
                match fit_lorentzian(&f_mhz, scan, cfg.run.weighting) {
                    Ok(f) => rows.extend(lorentzian_rows(&model, &f)),
                    Err(_) => rows.extend(failed_rows(&model, &["center_MHz", "fwhm_MHz", "height", "baseline"])),
                }
            }
            let aligned = align_and_sum_scans(&f_mhz, &series.scans)?;
            out.write(&out.sibling("aligned"), |w| {
                writeln!(w, "offset_MHz,shifted,unshifted")?;
                for ((f, a), b) in aligned.offsets.iter().zip(&aligned.shifted).zip(&aligned.unshifted) {
                    writeln!(w, "{f},{a},{b}")?;
                }
                Ok(())
            })?;
            for (model, y) in [("aligned", &aligned.shifted), ("unshifted", &aligned.unshifted)] {
                match fit_lorentzian(&aligned.offsets, y, Weighting::Unweighted) {
                    Ok(f) => rows.extend(lorentzian_rows(model, &f)),
                    Err(e) => {
                        eprintln!("{model}: fit failed: {e}");
                        failures += 1;
                        rows.extend(failed_rows(model, &["center_MHz", "fwhm_MHz", "height", "baseline"]));
                    }
                }
            }
            rows.push(FitRow::new("jumps", "mean_MHz", aligned.center_mean(), f64::NAN, true));
            rows.push(FitRow::new("jumps", "std_MHz", aligned.center_std(), f64::NAN, true));
            rows.push(FitRow::new(
                "jumps",
                "excluded_scans",
                aligned.excluded as f64,
                0.0,
                true,
            ));
            out.fits(&rows)?;
        }
        Command::Ionization => {
            let r = run_ionization(cfg)?;
            out.main(|w| {
                writeln!(w, "power_uW,gamma_per_ns")?;
                for p in &r.points {
                    writeln!(w, "{},{}", p.power, p.fit.as_ref().map_or(f64::NAN, |f| f.rate))?;
                }
                Ok(())
            })?;
            out.write(&out.sibling("traces"), |w| {
                writeln!(w, "power_uW,t_ns,counts")?;
                for p in &r.points {
                    for (t, c) in p.t.iter().zip(&p.counts) {
                        writeln!(w, "{},{t},{c}", p.power)?;
                    }
                }
                Ok(())
            })?;
            let mut rows = Vec::new();
            for p in &r.points {
                let model = format!("decay[{}]", p.power);
                match &p.fit {
                    Ok(f) => {
                        rows.push(FitRow::new(&model, "rate_per_ns", f.rate, f.stderr[0], f.converged));
                        rows.push(FitRow::new(&model, "amplitude", f.amplitude, f.stderr[1], f.converged));
                        rows.push(FitRow::new(&model, "baseline", f.baseline, f.stderr[2], f.converged));
                    }
                    Err(e) => {
                        eprintln!("{model}: fit failed: {e}");
                        failures += 1;
                        rows.extend(failed_rows(&model, &["rate_per_ns", "amplitude", "baseline"]));
                    }
                }
            }
            match &r.linear {
                Ok(f) => {
                    rows.push(FitRow::new("linear", "slope_per_ns_uW", f.slope, f.slope_stderr, true));
                    rows.push(FitRow::new("linear", "r_squared", f.r_squared, f64::NAN, !f.flagged));
                }
                Err(e) => {
                    eprintln!("linear: fit failed: {e}");
                    failures += 1;
                    rows.extend(failed_rows("linear", &["slope_per_ns_uW", "r_squared"]));
                }
            }
            out.fits(&rows)?;
        }
        Command::Postselect => {
            let r = run_postselection(cfg)?;
            out.main(|w| {
                writeln!(w, "n_probe_bin,t_ns,counts")?;
                for (edge, h) in r.table.probe_bin_edges.iter().zip(&r.table.histograms) {
                    if h.n_cycles == 0 {
                        continue;
                    }
                    for (t, c) in h.bin_edges.iter().zip(&h.counts) {
                        writeln!(w, "{edge},{t},{c}")?;
                    }
                }
                Ok(())
            })?;
            let mut rows = Vec::new();
            for (i, region) in r.regions.iter().enumerate() {
                let model = format!("region{i}");
                rows.push(FitRow::new(
                    &model,
                    "n_probe_min",
                    region.n_probe_range.0 as f64,
                    0.0,
                    true,
                ));
                rows.push(FitRow::new(
                    &model,
                    "pulses",
                    region.histogram.n_cycles as f64,
                    0.0,
                    true,
                ));
                rows.extend(cosine_rows(&model, &region.fit, &mut failures));
            }
            rows.push(FitRow::new("all", "pulses", r.all.histogram.n_cycles as f64, 0.0, true));
            rows.extend(cosine_rows("all", &r.all.fit, &mut failures));
            out.fits(&rows)?;
        }
        Command::Selftest => unreachable!("handled before config loading"),
    }
    Ok(failures)
}

fn load_document(cli: &Cli) -> Result<ConfigDocument> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None => String::new(),
    };
    let mut doc = ConfigDocument::load(&text, Some(cli.command.name()))?;
    if let Some(seed) = cli.seed {
        doc.run.seed = seed;
    }
    if let Some(cycles) = cli.cycles {
        if cycles == 0 {
            return Err(Error::Config {
                line: 0,
                message: "--cycles must be at least 1".into(),
            });
        }
        doc.run.cycles = Some(cycles);
    }
    if let Some(sampling) = cli.sampling {
        doc.run.sampling = sampling;
    }
    if let Some(threads) = cli.threads {
        doc.run.threads = Some(threads);
    }
    Ok(doc)
}

fn execute(cli: &Cli) -> Result<u8> {
    if cli.command == Command::Selftest {
        let checks = run_selftest();
        for c in &checks {
            println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        return Ok(if checks.iter().all(|c| c.passed) {
            EXIT_OK
        } else {
            EXIT_FAILURE
        });
    }
    let mut doc = load_document(cli)?;
    if let Some(n) = doc.run.threads {
        if n == 0 {
            return Err(Error::Config {
                line: 0,
                message: "threads must be at least 1".into(),
            });
        }
        // Fails only if a pool already exists (library use); results do not
        // depend on the pool size, so that is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    // Thread count never changes results, so it is not part of the echo.
    doc.run.threads = None;
    let cfg = doc.to_experiment()?;
    let outputs = Outputs {
        main: cli
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cli.command.name()))),
        header: header(&doc, cli.command),
    };
    let failures = dispatch(cli.command, &cfg, &outputs)?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_FAILURE })
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage_error() {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}
