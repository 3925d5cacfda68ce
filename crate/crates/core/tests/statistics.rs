use nv_optics::analysis::{fit_damped_cosine, Weighting};
use nv_optics::experiments::{run_rabi, ExperimentConfig, Sampling};

fn small(sampling: Sampling, cycles: u64, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.run.sampling = sampling;
    cfg.n_cycles = cycles;
    cfg.master_seed = seed;
    cfg.run.span = Some(40.0);
    cfg
}

#[test]
fn poisson_totals_match_expected_counts() {
    let expected = run_rabi(&small(Sampling::Expected, 4000, 0)).unwrap();
    let sampled = run_rabi(&small(Sampling::Poisson, 4000, 3)).unwrap();
    assert_eq!(expected.n_cycles, sampled.n_cycles);
    let (e, s) = (expected.total(), sampled.total());
    // Shot noise plus the spread from 4000 sampled spectral positions.
    assert!((s - e).abs() < 5.0 * e.sqrt() + 0.02 * e, "{s} vs {e}");

    // Bin by bin, in units of the Poisson standard deviation.
    let chi2: f64 = expected
        .counts
        .iter()
        .zip(&sampled.counts)
        .filter(|(e, _)| **e > 20.0)
        .map(|(e, s)| (s - e).powi(2) / e)
        .sum();
    let n = expected.counts.iter().filter(|e| **e > 20.0).count() as f64;
    assert!(chi2 / n < 2.0, "chi2/n = {}", chi2 / n);
}

#[test]
fn fit_errors_shrink_as_inverse_sqrt_of_cycles() {
    let err = |cycles: u64| {
        let cfg = small(Sampling::Poisson, cycles, 11);
        let fit = fit_damped_cosine(&run_rabi(&cfg).unwrap(), cfg.fit_window().unwrap(), Weighting::Poisson).unwrap();
        fit.stderr[0]
    };
    let ratio = err(10_000) / err(40_000);
    assert!((ratio - 2.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn monte_carlo_mean_approaches_quadrature() {
    let q = run_rabi(&small(Sampling::Expected, 20_000, 0)).unwrap();
    let mc = run_rabi(&small(Sampling::MonteCarlo, 20_000, 5)).unwrap();
    let peak = q.counts.iter().copied().fold(0.0, f64::max);
    let worst = q
        .counts
        .iter()
        .zip(&mc.counts)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.02 * peak, "{worst} vs peak {peak}");
}
