use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nv_optics::cli::{config_from_header, subcommand_from_header};

fn nv_optics(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nv-optics"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
[pulse]
repetitions = 20

[run]
cycles = 300
span_ns = 40.0
sampling = "poisson"
seed = 99
"#;

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let a = nv_optics(
        dir.path(),
        &["rabi", "--config", "small.toml", "--out", "a.csv", "--threads", "1"],
    );
    let b = nv_optics(dir.path(), &["rabi", "--config", "small.toml", "--out", "b.csv"]);
    assert!(a.status.code().unwrap() <= 1 && a.status.code() == b.status.code());
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.fits.csv"), read("b.fits.csv"));
}

#[test]
fn header_regenerates_the_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let first = nv_optics(
        dir.path(),
        &["rabi", "--config", "small.toml", "--seed", "5", "--out", "first.csv"],
    );
    let text = fs::read_to_string(dir.path().join("first.csv")).unwrap();
    assert_eq!(subcommand_from_header(&text), Some("rabi"));
    fs::write(dir.path().join("echo.toml"), config_from_header(&text)).unwrap();
    let second = nv_optics(dir.path(), &["rabi", "--config", "echo.toml", "--out", "second.csv"]);
    assert_eq!(first.status.code(), second.status.code());
    assert_eq!(text, fs::read_to_string(dir.path().join("second.csv")).unwrap());
}

#[test]
fn different_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    nv_optics(
        dir.path(),
        &["rabi", "--config", "small.toml", "--seed", "1", "--out", "s1.csv"],
    );
    nv_optics(
        dir.path(),
        &["rabi", "--config", "small.toml", "--seed", "2", "--out", "s2.csv"],
    );
    let body = |f: &str| {
        fs::read_to_string(dir.path().join(f))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_ne!(body("s1.csv"), body("s2.csv"));
}

#[test]
fn output_tables_have_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("power-sweep", "power_uW,omega_MHz,amplitude"),
        ("detuning-sweep", "delta_MHz,omega_MHz,amplitude"),
        ("ionization", "power_uW,gamma_per_ns"),
        ("rabi", "t_ns,counts,n_cycles"),
    ];
    for (sub, columns) in cases {
        let out = nv_optics(dir.path(), &[sub]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{sub}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = fs::read_to_string(dir.path().join(format!("{sub}.csv"))).unwrap();
        assert!(text.starts_with("## nv-optics "));
        assert_eq!(text.lines().find(|l| !l.starts_with('#')), Some(columns), "{sub}");
        let fits = fs::read_to_string(dir.path().join(format!("{sub}.fits.csv"))).unwrap();
        assert_eq!(
            fits.lines().find(|l| !l.starts_with('#')),
            Some("model,param,value,stderr,converged")
        );
    }
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("neg.toml"), "[spectral]\n\njump_fwhm_MHz = -3.0\n").unwrap();
    fs::write(dir.path().join("typo.toml"), "[pulse]\ndrive_nss = 3.0\n").unwrap();
    let cases: [&[&str]; 7] = [
        &["rabi", "--seed", "18446744073709551615"],
        &["warp-drive"],
        &[],
        &["rabi", "--sampling", "sometimes"],
        &["rabi", "--config", "neg.toml"],
        &["rabi", "--config", "typo.toml"],
        &["rabi", "--config", "missing.toml"],
    ];
    for args in cases {
        let out = nv_optics(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    let neg = nv_optics(dir.path(), &["rabi", "--config", "neg.toml"]);
    assert!(String::from_utf8_lossy(&neg.stderr).contains("line 3"));
    assert!(!dir.path().join("rabi.csv").exists());
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = nv_optics(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let help = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "rabi",
        "power-sweep",
        "detuning-sweep",
        "spectral-average",
        "damping-sweep",
        "scan-series",
        "ionization",
        "postselect",
        "selftest",
    ] {
        assert!(help.contains(sub), "{sub}");
    }
}

#[test]
fn failed_fit_exits_1_after_writing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("dark.toml"), "[emitter]\nkappa_MHz_per_sqrt_uW = 0.0\n").unwrap();
    let out = nv_optics(dir.path(), &["rabi", "--config", "dark.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let fits = fs::read_to_string(dir.path().join("rabi.fits.csv")).unwrap();
    assert!(fits.contains("rabi,omega_MHz,NaN,NaN,false"));
}
