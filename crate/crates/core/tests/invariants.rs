use loewner::bounds::{bernstein_bounded_bound, h_bennett, kl_div, markov_bound};
use loewner::processes::{
    doob_maximal_event, randomized_event, ville_stopped_event, RandomizedEvent, StoppingKind, StoppingRule,
};
use loewner::samplers::{random_pd, random_psd, random_symmetric, SeedSpec};
use loewner::symmat::{loewner_geq, PsdTolerance, SymMatrix};
use proptest::prelude::*;

fn sym(d: usize, seed: u64) -> SymMatrix {
    random_symmetric(d, 1.0, &mut SeedSpec::new(seed, 1).trial_rng(0))
}

fn pd(d: usize, seed: u64) -> SymMatrix {
    random_pd(d, 1.0, 0.1, &mut SeedSpec::new(seed, 2).trial_rng(0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spectrum_reconstructs(d in 1usize..=6, seed in any::<u64>()) {
        let m = sym(d, seed);
        let back = m.spectral().unwrap().reconstruct();
        let err = (&back - &m).max_abs_entry();
        prop_assert!(err <= 1e-12 * m.max_abs_entry().max(1.0));
    }

    #[test]
    fn eigenvalues_sorted(d in 1usize..=6, seed in any::<u64>()) {
        let ev = sym(d, seed).eigenvalues().unwrap();
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn exp_log_roundtrip(d in 1usize..=5, seed in any::<u64>()) {
        let m = sym(d, seed);
        let back = m.exp().unwrap().log().unwrap();
        prop_assert!((&back - &m).max_abs_entry() <= 1e-9);
    }

    #[test]
    fn psd_plus_psd_dominates(d in 1usize..=5, seed in any::<u64>()) {
        let mut rng = SeedSpec::new(seed, 3).trial_rng(0);
        let a = random_symmetric(d, 1.0, &mut rng);
        let b = &a + &random_psd(d, 1.0, &mut rng);
        prop_assert!(loewner_geq(&b, &a, PsdTolerance::default()).unwrap());
        prop_assert!(loewner_geq(&a, &a, PsdTolerance::default()).unwrap());
    }

    #[test]
    fn randomized_markov_at_identity_matches(d in 1usize..=4, seed in any::<u64>()) {
        let mut rng = SeedSpec::new(seed, 4).trial_rng(0);
        let a = random_pd(d, 1.0, 0.1, &mut rng);
        let x = random_psd(d, 2.0, &mut rng);
        let eye = SymMatrix::identity(d);
        let tol = PsdTolerance::default();
        let form = RandomizedEvent::Markov { a: a.clone() };
        prop_assert_eq!(randomized_event(&x, &eye, &form).unwrap(), loewner_geq(&x, &a, tol).unwrap());
        let mean = SymMatrix::zeros(d);
        let cheb = RandomizedEvent::ChebyshevRoot { a: a.clone(), q: 1.0, mean };
        prop_assert_eq!(randomized_event(&x, &eye, &cheb).unwrap(), loewner_geq(&x, &a, tol).unwrap());
    }

    #[test]
    fn doob_event_monotone_in_horizon(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = SeedSpec::new(seed, 5).trial_rng(0);
        let path: Vec<SymMatrix> = (0..=8).map(|_| random_psd(2, 1.0, &mut rng)).collect();
        let a = random_pd(2, 0.5, 0.5, &mut rng);
        let short = doob_maximal_event(&path, &a, n).unwrap();
        let long = doob_maximal_event(&path, &a, n + 1).unwrap();
        prop_assert!(!short || long);
    }

    #[test]
    fn ville_first_hit_without_u_is_maximal_event(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = SeedSpec::new(seed, 6).trial_rng(0);
        let path: Vec<SymMatrix> = (0..=n).map(|_| random_psd(2, 1.0, &mut rng)).collect();
        let a = random_pd(2, 0.5, 0.5, &mut rng);
        let rule = StoppingRule::new(StoppingKind::FirstHit, n).unwrap();
        prop_assert_eq!(
            ville_stopped_event(&path, &rule, &a, None).unwrap(),
            doob_maximal_event(&path, &a, n).unwrap()
        );
    }

    #[test]
    fn markov_bound_scales_inversely(d in 1usize..=4, seed in any::<u64>(), c in 0.1f64..10.0) {
        let mean = random_psd(d, 1.0, &mut SeedSpec::new(seed, 7).trial_rng(0));
        let a = pd(d, seed);
        let b1 = markov_bound(&mean, &a).unwrap().value;
        let b2 = markov_bound(&mean, &(&a * c)).unwrap().value;
        prop_assert!((b1 - c * b2).abs() <= 1e-10 * b1.max(1.0));
    }

    #[test]
    fn bennett_form_below_simplified(s2 in 0.01f64..100.0, r in 0.01f64..10.0, t in 0.01f64..50.0) {
        let (h, s) = bernstein_bounded_bound(s2, r, t).unwrap();
        prop_assert!(h.value <= s.value * (1.0 + 1e-12));
    }

    #[test]
    fn bennett_h_quadratic_lower_bound(x in 0.0f64..100.0) {
        let h = h_bennett(x).unwrap();
        prop_assert!(h >= x * x / (2.0 * (1.0 + x / 3.0)) - 1e-12);
    }

    #[test]
    fn kl_nonnegative(x in 0.0f64..=1.0, y in 0.001f64..0.999) {
        prop_assert!(kl_div(x, y).unwrap() >= -1e-15);
    }
}
