use nv_optics::analysis::fit_damped_cosine_points;
use nv_optics::analysis::Weighting;
use nv_optics::bloch::{integrate_with, steady_state, BlochState, IntegratorOptions, RateSet};
use nv_optics::config::ConfigDocument;
use nv_optics::detection::TimeHistogram;
use nv_optics::pulse::{Envelope, ShapedPulse};
use nv_optics::units::mhz_to_rad_per_ns;
use proptest::prelude::*;

fn rates() -> impl Strategy<Value = RateSet> {
    (1.0f64..40.0, 0.0f64..0.5).prop_map(|(t1, extra)| RateSet::new(1.0 / t1, 0.5 / t1 + extra).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bloch_vector_stays_in_the_ball(
        rates in rates(),
        omega_mhz in 0.0f64..500.0,
        delta_mhz in -400.0f64..400.0,
        duration in 2.0f64..30.0,
        rise in 0.0f64..3.0,
    ) {
        let pulse = ShapedPulse::new(duration, rise, rise).unwrap();
        let t: Vec<f64> = (0..=300).map(|i| i as f64 * 0.15).collect();
        let traj = integrate_with(
            &rates, &pulse, mhz_to_rad_per_ns(omega_mhz), mhz_to_rad_per_ns(delta_mhz), &t,
            &IntegratorOptions::default(),
        ).unwrap();
        for s in &traj.states {
            prop_assert!(s.norm_squared() <= 1.0 + 1e-9);
        }
        for r in &traj.rho_ee {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(r));
        }
    }

    #[test]
    fn undriven_emitter_stays_in_the_ground_state(rates in rates(), delta_mhz in -400.0f64..400.0) {
        let pulse = ShapedPulse::new(10.0, 1.0, 1.0).unwrap();
        let t: Vec<f64> = (0..=50).map(|i| i as f64).collect();
        let traj = integrate_with(&rates, &pulse, 0.0, mhz_to_rad_per_ns(delta_mhz), &t, &IntegratorOptions::default()).unwrap();
        prop_assert!(traj.states.iter().all(|s| *s == BlochState::default()));
    }

    #[test]
    fn steady_state_is_symmetric_and_below_half(
        rates in rates(),
        omega_mhz in 0.0f64..2000.0,
        delta_mhz in 0.0f64..500.0,
    ) {
        let (o, d) = (mhz_to_rad_per_ns(omega_mhz), mhz_to_rad_per_ns(delta_mhz));
        let a = steady_state(o, d, &rates);
        prop_assert_eq!(a, steady_state(o, -d, &rates));
        prop_assert!((0.0..0.5).contains(&a));
        prop_assert!(steady_state(o, d + 0.1, &rates) <= a);
    }

    #[test]
    fn envelope_is_bounded(duration in 0.5f64..50.0, rise in 0.0f64..5.0, fall in 0.0f64..5.0, x in -10.0f64..70.0) {
        let p = ShapedPulse::new(duration, rise, fall).unwrap();
        let a = p.amplitude(x);
        prop_assert!((0.0..=1.0).contains(&a));
        if x < 0.0 || x > duration + 20.0 * fall.max(1e-3) {
            prop_assert!(a < 1e-6);
        }
    }

    #[test]
    fn histogram_merge_is_associative_and_commutative(
        a in prop::collection::vec(0u32..1000, 16),
        b in prop::collection::vec(0u32..1000, 16),
        c in prop::collection::vec(0u32..1000, 16),
    ) {
        let hist = |v: &[u32], n: u64| {
            let mut h = TimeHistogram::uniform(0.0, 0.256, v.len());
            h.counts = v.iter().map(|&x| x as f64).collect();
            h.n_cycles = n;
            h
        };
        let (ha, hb, hc) = (hist(&a, 1), hist(&b, 2), hist(&c, 3));
        let mut left = ha.clone();
        left.merge(&hb).unwrap();
        left.merge(&hc).unwrap();
        let mut bc = hb.clone();
        bc.merge(&hc).unwrap();
        let mut right = ha.clone();
        right.merge(&bc).unwrap();
        prop_assert_eq!(&left, &right);
        let mut swapped = hb.clone();
        swapped.merge(&ha).unwrap();
        let mut ab = ha.clone();
        ab.merge(&hb).unwrap();
        prop_assert_eq!(swapped, ab);
        prop_assert_eq!(left.n_cycles, 6);
    }

    #[test]
    fn damped_cosine_recovers_parameters(
        omega in 1.0f64..4.0,
        tau in 4.0f64..20.0,
        t0 in 0.0f64..1.0,
        amplitude in 0.2f64..5.0,
        offset in -2.0f64..2.0,
    ) {
        let t: Vec<f64> = (0..160).map(|i| 1.0 + 0.2 * i as f64).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| amplitude * (omega * (t - t0)).cos() * (-(t - t0) / tau).exp() + offset)
            .collect();
        let fit = fit_damped_cosine_points(&t, &y, Weighting::Unweighted).unwrap();
        prop_assert!((fit.omega / omega - 1.0).abs() < 1e-6, "{} vs {}", fit.omega, omega);
        prop_assert!((fit.tau / tau - 1.0).abs() < 1e-5, "{} vs {}", fit.tau, tau);
        prop_assert!((fit.offset - offset).abs() < 1e-6 * amplitude);
    }

    #[test]
    fn config_echo_round_trips(
        t1 in 1.0f64..50.0,
        power in 0.1f64..100.0,
        reps in 1u32..5000,
        seed in 0..=i64::MAX as u64,
    ) {
        let text = format!("[emitter]\nt1_ns = {t1:?}\n[pulse]\npower_uW = {power:?}\nrepetitions = {reps}\n[run]\nseed = {seed}\n");
        let doc = ConfigDocument::load(&text, Some("rabi")).unwrap();
        let again = ConfigDocument::load(&doc.to_toml(), Some("rabi")).unwrap();
        prop_assert_eq!(&doc, &again);
        prop_assert_eq!(doc.to_toml(), again.to_toml());
    }
}
