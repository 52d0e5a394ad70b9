//! Property-based invariants of the mechanisms, costs and audits.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use staircase::abstract_mech::{abstract_distribution, CandidateScoring};
use staircase::costs::{staircase_cost, CostFunction};
use staircase::mechanisms::{ContinuousNoise, DiscreteStaircase, Laplace, SampleTrace, Staircase};
use staircase::optimizer::gamma_opt;
use staircase::PrivacyParams;

fn eps() -> impl Strategy<Value = f64> {
    0.05f64..8.0
}

fn delta() -> impl Strategy<Value = f64> {
    0.25f64..4.0
}

fn power_cost() -> impl Strategy<Value = CostFunction> {
    prop_oneof![
        Just(CostFunction::Abs),
        Just(CostFunction::Square),
        (3u32..=5).prop_map(CostFunction::Moment),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn staircase_density_is_symmetric(e in eps(), d in delta(), g in 0.0f64..=1.0, x in -30.0f64..30.0) {
        let m = Staircase::new(PrivacyParams::new(e, d).unwrap(), g).unwrap();
        prop_assert_eq!(m.pdf(x).unwrap(), m.pdf(-x).unwrap());
        let total = m.distribution(x) + m.distribution(-x);
        // F(x) + F(-x) = 1 for a symmetric continuous law
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn staircase_decays_by_b_per_period(e in eps(), d in delta(), g in 0.0f64..=1.0, k in 0u32..20, t in 0.0f64..1.0) {
        let p = PrivacyParams::new(e, d).unwrap();
        let m = Staircase::new(p, g).unwrap();
        // keep the point off breakpoints so rounding cannot change the level
        let x = (f64::from(k) + t) * d;
        prop_assume!((t - g).abs() > 1e-9 && t > 1e-9);
        let ratio = m.pdf(x + d).unwrap() / m.pdf(x).unwrap();
        prop_assert!((ratio - p.b()).abs() <= 1e-12 * p.b());
    }

    #[test]
    fn staircase_is_monotone_in_magnitude(e in eps(), d in delta(), g in 0.0f64..=1.0, x in 0.0f64..20.0, step in 0.0f64..5.0) {
        let m = Staircase::new(PrivacyParams::new(e, d).unwrap(), g).unwrap();
        prop_assert!(m.pdf(x + step).unwrap() <= m.pdf(x).unwrap());
        prop_assert!(m.distribution(x + step) >= m.distribution(x));
    }

    #[test]
    fn staircase_mass_is_one(e in eps(), d in delta(), g in 0.0f64..=1.0) {
        let m = Staircase::new(PrivacyParams::new(e, d).unwrap(), g).unwrap();
        prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_reconstructs_sample(e in eps(), d in delta(), g in 0.0f64..=1.0, seed in any::<u64>()) {
        let m = Staircase::new(PrivacyParams::new(e, d).unwrap(), g).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let s = m.sample(&mut rng);
        match s.trace {
            Some(SampleTrace::Staircase(latent)) => prop_assert_eq!(m.from_latent(&latent), s.value),
            other => prop_assert!(false, "unexpected trace {:?}", other),
        }
    }

    #[test]
    fn discrete_trace_reconstructs_sample(e in eps(), dl in 1u64..8, seed in any::<u64>(), r_frac in 0.0f64..1.0) {
        let p = PrivacyParams::new(e, dl as f64).unwrap();
        let r = 1 + ((dl - 1) as f64 * r_frac).round() as u64;
        let m = DiscreteStaircase::new(p, r).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let s = m.sample(&mut rng);
        match s.trace {
            Some(SampleTrace::Discrete(latent)) => prop_assert_eq!(m.from_latent(&latent), s.value),
            other => prop_assert!(false, "unexpected trace {:?}", other),
        }
    }

    #[test]
    fn discrete_pmf_symmetric_periodic_normalized(e in eps(), dl in 1u64..10, r_frac in 0.0f64..1.0, i in -200i64..200) {
        let p = PrivacyParams::new(e, dl as f64).unwrap();
        let r = 1 + ((dl - 1) as f64 * r_frac).round() as u64;
        let m = DiscreteStaircase::new(p, r).unwrap();
        prop_assert_eq!(m.pmf(i), m.pmf(-i));
        let j = i.abs();
        // subnormal tails have lost relative precision
        prop_assume!(m.pmf(j + dl as i64) > f64::MIN_POSITIVE);
        let ratio = m.pmf(j + dl as i64) / m.pmf(j);
        prop_assert!((ratio - p.b()).abs() <= 1e-12 * p.b());
        prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(m.pmf(j + 1) <= m.pmf(j));
    }

    #[test]
    fn laplace_and_staircase_respect_dp(e in eps(), d in delta(), g in 0.0f64..=1.0, x in -20.0f64..20.0, s in -1.0f64..=1.0) {
        let p = PrivacyParams::new(e, d).unwrap();
        let bound = p.ratio_bound() * (1.0 + 1e-12);
        let st = Staircase::new(p, g).unwrap();
        prop_assert!(st.density(x) <= bound * st.density(x + s * d));
        let lap = Laplace::new(p);
        prop_assert!(lap.density(x) <= bound * lap.density(x + s * d));
    }

    #[test]
    fn optimum_beats_any_gamma(e in eps(), d in delta(), g in 0.0f64..=1.0, cost in power_cost()) {
        let p = PrivacyParams::new(e, d).unwrap();
        let best = gamma_opt(&p, &cost).unwrap().cost.value;
        let other = staircase_cost(&p, g, &cost).unwrap().value;
        prop_assert!(best <= other * (1.0 + 1e-12));
    }

    #[test]
    fn abstract_is_two_epsilon_private(
        e in eps(),
        dq in 1u32..=8,
        gq in 0u32..=64,
        pairs in proptest::collection::vec((0u32..512, -64i32..=64), 1..=16),
    ) {
        // dyadic values keep step boundaries exact
        let d = f64::from(dq) / 4.0;
        let g = f64::from(gq) / 64.0;
        let p = PrivacyParams::new(e, d).unwrap();
        let s1: Vec<f64> = pairs.iter().map(|&(s, _)| f64::from(s) / 64.0).collect();
        let s2: Vec<f64> = pairs
            .iter()
            .map(|&(s, t)| (f64::from(s) / 64.0 + f64::from(t) / 64.0 * d).max(0.0))
            .collect();
        let p1 = abstract_distribution(&CandidateScoring::from_scores(s1, d).unwrap(), &p, g).unwrap();
        let p2 = abstract_distribution(&CandidateScoring::from_scores(s2, d).unwrap(), &p, g).unwrap();
        let bound = (2.0 * e).exp() * (1.0 + 1e-12);
        for (a, b) in p1.iter().zip(&p2) {
            prop_assert!(a / b <= bound && b / a <= bound);
        }
        prop_assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
