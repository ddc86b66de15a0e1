mod common;

use bntune_core::bounds::{self, Interval};
use bntune_core::inference::posterior;
use bntune_core::model::{covaried_row, load_network, serialize_network};
use bntune_core::random::{random_evidence, random_network, RandomNetworkConfig};
use bntune_core::sensitivity::{query_derivative, sensitivity_function, tune, Constraint, Direction, RecommendationStatus};
use bntune_core::Event;
use proptest::prelude::*;
use rand::Rng;

fn seeded(check: fn(u64) -> common::Check, seed: u64) -> Result<(), TestCaseError> {
    check(seed).map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn join_tree_matches_enumeration(seed in any::<u64>()) {
        seeded(common::oracle_equivalence, seed)?;
    }

    #[test]
    fn evidence_probability_is_linear(seed in any::<u64>()) {
        seeded(common::evidence_collinearity, seed)?;
    }

    #[test]
    fn derivative_matches_finite_difference(seed in any::<u64>()) {
        seeded(common::derivative_matches_finite_difference, seed)?;
    }

    #[test]
    fn derivative_bound_holds(seed in any::<u64>()) {
        seeded(common::derivative_bound_holds, seed)?;
    }

    #[test]
    fn log_odds_bound_holds(seed in any::<u64>()) {
        seeded(common::log_odds_bound_holds, seed)?;
    }

    #[test]
    fn solver_is_sound(seed in any::<u64>()) {
        seeded(common::solver_soundness, seed)?;
    }

    #[test]
    fn envelope_is_sound(seed in any::<u64>()) {
        seeded(common::envelope_soundness, seed)?;
    }

    #[test]
    fn network_text_round_trips(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let config = RandomNetworkConfig { variables: 6, max_parents: 2, max_cardinality: 4, zero_probability: 0.2 };
        let net = random_network(&mut r, &config);
        let text = serialize_network(&net);
        let back = load_network(&text).unwrap();
        prop_assert_eq!(serialize_network(&back), text);
    }

    #[test]
    fn sensitivity_function_is_consistent(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let config = RandomNetworkConfig { variables: 5, max_parents: 2, max_cardinality: 3, zero_probability: 0.0 };
        let net = random_network(&mut r, &config);
        let ev = random_evidence(&mut r, &net, 2);
        let free: Vec<_> = net.var_ids().filter(|&v| !ev.contains(v)).collect();
        prop_assume!(!free.is_empty());
        let y = Event::new(free[r.random_range(0..free.len())], 0);
        let params = net.meta_parameters();
        let param = params[r.random_range(0..params.len())];
        let f = sensitivity_function(&net, &ev, y, &param).unwrap();
        let tau0 = param.current_value(&net);
        prop_assert!((f.eval(tau0).unwrap() - posterior(&net, &ev, y).unwrap()).abs() < 1e-9);
        let d = query_derivative(&net, &ev, y, &param).unwrap();
        prop_assert!((f.derivative(tau0).unwrap() - d).abs() < 1e-9);
        for k in 0..=10 {
            let tau = k as f64 / 10.0;
            prop_assert!(f.c * tau + f.d >= -1e-12);
        }
    }

    #[test]
    fn recommendation_invariants(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let config = RandomNetworkConfig { variables: 5, max_parents: 2, max_cardinality: 3, zero_probability: 0.0 };
        let net = random_network(&mut r, &config);
        let ev = random_evidence(&mut r, &net, 2);
        let free: Vec<_> = net.var_ids().filter(|&v| !ev.contains(v)).collect();
        prop_assume!(!free.is_empty());
        let y = Event::new(free[r.random_range(0..free.len())], 0);
        let direction = if r.random_bool(0.5) { Direction::AtLeast } else { Direction::AtMost };
        let c = Constraint::value(y, direction, r.random_range(0.05..0.95));
        let report = tune(&net, &ev, &c).unwrap();
        prop_assert_eq!(report.recommendations.len(), net.meta_parameters().len());
        let mut last = 0.0;
        let mut seen_empty = false;
        for rec in &report.recommendations {
            match rec.feasible {
                None => {
                    prop_assert_eq!(rec.status, RecommendationStatus::Irrelevant);
                    seen_empty = true;
                }
                Some(iv) => {
                    prop_assert!(!seen_empty, "empty intervals sort last");
                    prop_assert!(0.0 <= iv.lo && iv.lo <= iv.hi && iv.hi <= 1.0);
                    let d = rec.log_odds_distance.unwrap();
                    prop_assert!(d >= last);
                    last = d;
                    let interior = iv.lo < rec.current && rec.current < iv.hi;
                    prop_assert!(!interior || report.already_satisfied);
                }
            }
        }
    }

    #[test]
    fn log_odds_distance_symmetries(p in 0.001f64..0.999, q in 0.001f64..0.999) {
        let d = bounds::log_odds_distance(p, q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((d - bounds::log_odds_distance(q, p).unwrap()).abs() < 1e-12);
        prop_assert!((d - bounds::log_odds_distance(1.0 - p, 1.0 - q).unwrap()).abs() < 1e-9);
        prop_assert_eq!(bounds::log_odds_distance(p, p).unwrap(), 0.0);
    }

    #[test]
    fn relative_sensitivity_at_most_two(q in 0.0001f64..0.9999, p in 0.0001f64..=0.5) {
        let k = bounds::relative_sensitivity_bound(q, p).unwrap();
        prop_assert!(k <= 2.0 && k > 0.0);
    }

    #[test]
    fn query_interval_contains_start(q in 0.001f64..0.999, p in 0.001f64..0.999, p2 in 0.001f64..0.999) {
        let iv = bounds::query_bounds_after_change(q, p, p2).unwrap();
        prop_assert!(iv.lo <= q + 1e-12 && q <= iv.hi + 1e-12);
    }

    #[test]
    fn envelope_intervals_contain_zero(
        q0 in 0.05f64..0.95,
        below in 0.01f64..0.5,
        above in 0.01f64..0.5,
    ) {
        let range = Interval::new(q0 * (1.0 - below), q0 + (1.0 - q0) * above);
        let env = bounds::permissible_envelope(q0, range, &bounds::default_grid()).unwrap();
        for pt in &env.points {
            for iv in [pt.two_sided, pt.upper_guard, pt.lower_guard] {
                prop_assert!(iv.lo <= 0.0 && 0.0 <= iv.hi);
                prop_assert!(pt.p + iv.lo >= -1e-12 && pt.p + iv.hi <= 1.0 + 1e-12);
            }
        }
        let first = env.points.first().unwrap().two_sided.width();
        let middle = env.points[env.points.len() / 2].two_sided.width();
        prop_assert!(first < middle);
    }

    #[test]
    fn proportional_covariation(
        raw in prop::collection::vec(0.01f64..1.0, 2..6),
        driven_seed in any::<usize>(),
        new_value in 0.0f64..=1.0,
    ) {
        let total: f64 = raw.iter().sum();
        let row: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let driven = driven_seed % row.len();
        let next = covaried_row(&row, driven, new_value);
        prop_assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert_eq!(next[driven], new_value);
        // siblings keep their ratios
        let others: Vec<usize> = (0..row.len()).filter(|&i| i != driven).collect();
        for w in others.windows(2) {
            let (a, b) = (w[0], w[1]);
            prop_assert!((next[a] * row[b] - next[b] * row[a]).abs() < 1e-9);
        }
    }
}
