mod common;

use std::collections::BTreeMap;

use decarb_core::sampler::{featurize_weeks, select_weeks, BinSpec, FeatureWeeks, WeekFeatureHistogram, WEEKS_PER_YEAR};
use decarb_milp::{ReferenceBackend, SolveOptions};
use proptest::prelude::*;

fn exact() -> SolveOptions {
    SolveOptions {
        relative_gap_tol: 0.0,
        ..SolveOptions::default()
    }
}

fn histogram(ids: &[u32], profiles: &[Vec<f64>]) -> WeekFeatureHistogram {
    let f = FeatureWeeks {
        id: "load".into(),
        weeks: ids.iter().copied().zip(profiles.iter().cloned()).collect::<BTreeMap<_, _>>(),
    };
    featurize_weeks(&[f], &[BinSpec { count: 4, range: None }]).unwrap()
}

fn profiles() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..100.0, 8), 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn matches_enumeration_and_weights_sum_to_a_year(p in profiles(), k in 1usize..=3) {
        let hist = histogram(&[1, 2, 3, 4, 5, 6], &p);
        let plan = select_weeks(&hist, k, &ReferenceBackend, &exact()).unwrap();
        let exact_d = common::exhaustive_distance(&hist, k);
        prop_assert!((plan.distance - exact_d).abs() <= 1e-9, "{} vs {}", plan.distance, exact_d);
        prop_assert_eq!(plan.weeks.len(), k);
        let total: f64 = plan.weeks.iter().map(|w| w.1).sum();
        prop_assert!((total - WEEKS_PER_YEAR).abs() <= 1e-9);
        prop_assert!(plan.weeks.iter().all(|w| w.1 >= 0.0));
    }

    #[test]
    fn relabeling_weeks_keeps_the_distance(p in profiles(), k in 1usize..=3, rot in 1usize..6) {
        let ids = [1, 2, 3, 4, 5, 6];
        let mut rotated = p.clone();
        rotated.rotate_left(rot);
        let a = select_weeks(&histogram(&ids, &p), k, &ReferenceBackend, &exact()).unwrap();
        let b = select_weeks(&histogram(&[40, 41, 42, 43, 44, 45], &rotated), k, &ReferenceBackend, &exact()).unwrap();
        prop_assert!((a.distance - b.distance).abs() <= 1e-9);
    }

    #[test]
    fn more_weeks_never_fit_worse(p in profiles()) {
        let hist = histogram(&[1, 2, 3, 4, 5, 6], &p);
        let d: Vec<f64> = (1..=4).map(|k| select_weeks(&hist, k, &ReferenceBackend, &exact()).unwrap().distance).collect();
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", d);
    }
}

#[test]
fn selecting_every_week_is_exact() {
    let p: Vec<Vec<f64>> = (0..5).map(|w| (0..8).map(|h| (w * 8 + h) as f64).collect()).collect();
    let hist = histogram(&[1, 2, 3, 4, 5], &p);
    let plan = select_weeks(&hist, 5, &ReferenceBackend, &exact()).unwrap();
    assert!(plan.distance <= 1e-9);
    assert!(plan.proven_optimal);
}

#[test]
fn out_of_range_values_land_in_edge_bins() {
    let f = FeatureWeeks {
        id: "load".into(),
        weeks: [(1, vec![-5.0, 0.5]), (2, vec![1.5, 9.0])].into_iter().collect(),
    };
    let hist = featurize_weeks(&[f], &[BinSpec { count: 2, range: Some((0.0, 2.0)) }]).unwrap();
    assert_eq!(hist.weekly_freq, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(hist.yearly_freq, vec![0.5, 0.5]);
}

#[test]
fn bad_targets_are_rejected() {
    let p: Vec<Vec<f64>> = (0..3).map(|w| vec![w as f64; 4]).collect();
    let hist = histogram(&[1, 2, 3], &p);
    assert!(select_weeks(&hist, 0, &ReferenceBackend, &exact()).is_err());
    assert!(select_weeks(&hist, 4, &ReferenceBackend, &exact()).is_err());
}
