//! Randomized invariants.

use asip_lab::coupling::{embed_conditioned, embed_increment, BrownianGrid};
use asip_lab::martingale::{cutoff, level_of, truncate, DiscreteLaw};
use asip_lab::rng::{from_seed, replica_seed};
use asip_lab::runner::{format_float, ExperimentConfig, ExperimentKind};
use asip_lab::stats::{tail_oscillation, Thresholds};
use asip_lab::systems::{typical_orbit, IntervalMap};
use proptest::prelude::*;

fn any_map() -> impl Strategy<Value = IntervalMap> {
    prop_oneof![
        Just(IntervalMap::doubling()),
        Just(IntervalMap::gauss()),
        (1.05f64..3.95).prop_map(|b| IntervalMap::beta(b).unwrap()),
        (0.05f64..0.95).prop_map(|s| IntervalMap::piecewise_linear(s).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_oscillation_matches_brute_force(xi in prop::collection::vec(-5.0f64..5.0, 0..60), r in 0usize..70) {
        let brute = (r.min(xi.len())..xi.len())
            .map(|m| xi[m..].iter().sum::<f64>().abs())
            .fold(0.0, f64::max);
        prop_assert!((tail_oscillation(&xi, r) - brute).abs() < 1e-9);
    }

    #[test]
    fn float_cells_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let text = format_float(v);
        prop_assert_eq!(text.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn levels_bracket_the_index(ell in 3usize..(1 << 40)) {
        let j = level_of(ell);
        prop_assert!((1usize << j) < ell && ell <= (1usize << (j + 1)));
    }

    #[test]
    fn cutoffs_grow_and_truncation_respects_them(j in 3usize..60, p in 2.01f64..4.0, x in -1e3f64..1e3) {
        prop_assert!(cutoff(j + 1, p) > cutoff(j, p));
        let c = cutoff(j, p);
        let t = truncate(x, c);
        prop_assert!(t.abs() <= c);
        prop_assert!(t == x || t == 0.0);
    }

    #[test]
    fn replica_seeds_are_distinct(master in any::<u64>(), i in any::<u64>(), j in any::<u64>()) {
        prop_assume!(i != j);
        prop_assert_ne!(replica_seed(master, i), replica_seed(master, j));
    }

    #[test]
    fn preimages_map_back_and_carry_unit_mass(map in any_map(), y in 0.001f64..0.999) {
        let pre = map.preimages(y);
        let mass: f64 = pre.atoms.iter().map(|a| a.weight).sum::<f64>() + pre.tail_mass;
        prop_assert!((mass - 1.0).abs() < 1e-9, "{}: mass {mass}", map.name());
        for a in &pre.atoms {
            prop_assert!(a.weight >= 0.0);
            prop_assert!((map.apply(a.point) - y).abs() < 1e-9 * (1.0 + map.derivative(a.point).abs()));
        }
    }

    #[test]
    fn reversed_orbits_are_orbits(map in any_map(), seed in any::<u64>()) {
        let orbit = typical_orbit(&map, 40, &mut from_seed(seed));
        prop_assert_eq!(orbit.points.len(), 41);
        for w in orbit.points.windows(2) {
            prop_assert!((0.0..=1.0).contains(&w[0]));
            prop_assert!((map.apply(w[0]) - w[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn embedding_lands_on_an_atom(a in 0.05f64..3.0, b in 0.05f64..3.0, c in 0.05f64..3.0, seed in any::<u64>()) {
        // three atoms −a, 0, b with weights making the law centered
        let law = DiscreteLaw::from_pairs(&[(-a, b), (0.0, c), (b, a)]).unwrap();
        let mut bg = BrownianGrid::new(seed, 1e-3);
        let out = embed_increment(&mut bg, &law).unwrap();
        prop_assert!([-a, 0.0, b].contains(&out.value));
        prop_assert!(out.stop_time >= 0.0);
        prop_assert!((bg.value() - out.value).abs() < 1e-12);
        let forced = embed_conditioned(&mut bg, &law, 2).unwrap();
        prop_assert_eq!(forced.value, b);
    }

    #[test]
    fn configs_survive_serialization(seed in any::<u64>(), sizes in prop::collection::vec(16usize..1 << 20, 1..4), alpha in 0.001f64..0.2) {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Sigma2, "gauss", "identity_centered", seed);
        cfg.sizes = sizes;
        cfg.thresholds = Thresholds { alpha, ..Thresholds::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
