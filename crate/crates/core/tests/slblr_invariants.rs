mod common;

use std::collections::BTreeSet;

use common::{analytic_toy, toy_dual, TOY_DUAL_OPT};
use decarb_core::scenario::SlblrConfig;
use decarb_core::slblr::{
    build_relaxed_model, group_count, recover_primal, run, select_subproblem_group, solve_subproblem, BinaryHistory,
    Decomposition, SubproblemOutcome, UnitGroup,
};
use decarb_milp::{reference_solve, LinExpr, MixedIntegerModel, ReferenceBackend, Sense, SolveOptions};
use proptest::prelude::*;

fn exact() -> SolveOptions {
    SolveOptions {
        relative_gap_tol: 1e-9,
        ..SolveOptions::default()
    }
}

fn config(json: &str) -> SlblrConfig {
    serde_json::from_str(json).unwrap()
}

/// One thermal unit plus a storage-like continuous source `s` that belongs
/// to no unit and is held inside the trust region.
fn toy_with_trust_var(load: f64) -> (Decomposition, usize) {
    let mut m = MixedIntegerModel::new("trust");
    let va = m.add_binary("v[a]").unwrap();
    let pa = m.add_continuous("p[a]", 0.0, 10.0).unwrap();
    let s = m.add_continuous("s", 0.0, 10.0).unwrap();
    let mut e = LinExpr::term(pa, 1.0);
    e.add_term(va, -10.0);
    m.add_row("cap[a]", &e, Sense::Le, 0.0).unwrap();
    let mut e = LinExpr::term(pa, 1.0);
    e.add_term(s, 1.0);
    let bal = m.add_row("balance", &e, Sense::Eq, load).unwrap();
    let mut o = LinExpr::term(va, 20.0);
    o.add_term(pa, 10.0).add_term(s, 25.0);
    m.add_objective(&o, 1.0);
    let d = Decomposition {
        model: m,
        balance_rows: vec![bal],
        units: vec![UnitGroup {
            id: "a".into(),
            vars: vec![va, pa],
        }],
        trust_vars: vec![s],
        default_delta: 1.0,
        heuristic_fixings: vec![],
    };
    (d, s.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relaxed_objective_matches_penalized_value(
        lambda in -80.0f64..80.0,
        c in 0.0f64..20.0,
        va in 0u8..=1,
        vb in 0u8..=1,
        fa in 0.0f64..1.0,
        fb in 0.0f64..1.0,
    ) {
        let (pa, pb) = (10.0 * fa * va as f64, 10.0 * fb * vb as f64);
        let d = analytic_toy();
        let relaxed = build_relaxed_model(&d.model, &d.balance_rows, &[lambda], c).unwrap();
        let x = [va as f64, pa, vb as f64, pb];
        let full = relaxed.complete(&x);
        let direct = relaxed.value(&x);
        prop_assert!((relaxed.model.evaluate_objective(&full) - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        prop_assert!(relaxed.model.max_row_violation(&full) <= 1e-9);
        let r = pa + pb - 15.0;
        let by_hand = 20.0 * x[0] + 10.0 * pa + 5.0 * x[2] + 30.0 * pb + lambda * r + c * r.abs();
        prop_assert!((direct - by_hand).abs() <= 1e-9 * by_hand.abs().max(1.0));
    }

    #[test]
    fn relaxed_optimum_is_the_dual_function(lambda in -80.0f64..40.0) {
        let d = analytic_toy();
        let relaxed = build_relaxed_model(&d.model, &d.balance_rows, &[lambda], 0.0).unwrap();
        let sol = reference_solve(&relaxed.model, &exact()).unwrap();
        let q = toy_dual(lambda);
        prop_assert!((sol.objective - q).abs() <= 1e-6 * q.abs().max(1.0), "q({}) = {} vs {}", lambda, sol.objective, q);
        prop_assert!(sol.objective <= TOY_DUAL_OPT + 1e-6);
    }

    #[test]
    fn accepted_candidates_respect_trust_region_and_decrease(
        lambda in -40.0f64..0.0,
        s0 in 0.0f64..10.0,
        on in 0u8..=1,
        delta in 0.1f64..5.0,
    ) {
        let (d, s) = toy_with_trust_var(12.0);
        let relaxed = build_relaxed_model(&d.model, &d.balance_rows, &[lambda], 0.0).unwrap();
        let on = on as f64;
        let incumbent = relaxed.complete(&[on, 10.0 * on, s0]);
        let before = relaxed.value(&incumbent);
        let out = solve_subproblem(&relaxed, &d, &[vec![0]], 0, &incumbent, Some(delta), &ReferenceBackend, &exact()).unwrap();
        if let SubproblemOutcome::Accepted { x, value, .. } = out {
            prop_assert!((x[s] - s0).abs() <= delta + 1e-9, "moved {} with delta {}", (x[s] - s0).abs(), delta);
            prop_assert!(value < before);
            prop_assert!((relaxed.value(&x) - value).abs() <= 1e-9 * value.abs().max(1.0));
        }
    }

    #[test]
    fn groups_partition_units_each_cycle(n in 1usize..12, size in 1usize..5, seed in any::<u64>(), cycle in 0usize..4) {
        let ids: Vec<String> = (0..n).map(|i| format!("u{i:02}")).collect();
        let g = group_count(n, size);
        let mut seen = BTreeSet::new();
        for slot in 0..g {
            let k = cycle * g + slot;
            let members = select_subproblem_group(k, &ids, size, seed).unwrap();
            prop_assert_eq!(&members, &select_subproblem_group(k, &ids, size, seed).unwrap());
            prop_assert!(members.windows(2).all(|w| ids[w[0]] < ids[w[1]]));
            prop_assert!(members.len() <= size);
            for m in members {
                prop_assert!(seen.insert(m), "unit {} twice in cycle {}", m, cycle);
            }
        }
        prop_assert_eq!(seen.len(), n);
    }
}

#[test]
fn units_outside_the_group_stay_at_incumbent() {
    let d = analytic_toy();
    let relaxed = build_relaxed_model(&d.model, &d.balance_rows, &[-30.5], 0.0).unwrap();
    let incumbent = relaxed.complete(&[1.0, 10.0, 0.0, 0.0]);
    match solve_subproblem(&relaxed, &d, &[vec![0], vec![1]], 1, &incumbent, None, &ReferenceBackend, &exact()).unwrap() {
        SubproblemOutcome::Accepted { x, groups, .. } => {
            assert_eq!(groups, vec![1]);
            assert_eq!((x[0], x[1]), (1.0, 10.0));
        }
        SubproblemOutcome::Stall => {}
    }
}

#[test]
fn recovery_repairs_an_infeasible_incumbent() {
    let d = analytic_toy();
    let incumbent = [0.0, 0.0, 0.0, 0.0];
    let history = BinaryHistory::new(&d.model, &incumbent);
    let rec = recover_primal(&d.model, &incumbent, &history, 10, 1, 0.0, &ReferenceBackend, &exact()).unwrap();
    assert!(rec.attempts > 1);
    assert!(d.model.is_feasible(&rec.x, 1e-9));
    assert!((rec.objective - 275.0).abs() < 1e-6, "objective {}", rec.objective);
}

#[test]
fn zero_iterations_still_returns_a_feasible_plan() {
    let d = analytic_toy();
    let cfg = config(r#"{"group_size": 1, "max_iterations": 0}"#);
    let out = run(&d, &cfg, 3, &ReferenceBackend, &exact()).unwrap();
    assert!(out.report.iterations.is_empty());
    assert!(d.model.is_feasible(&out.x, 1e-9));
    assert!(out.objective >= 275.0 - 1e-6);
    assert!(out.report.l_best <= out.objective + 1e-9);
}

#[test]
fn single_unit_balance_matches_exact_solve() {
    let (d, _) = toy_with_trust_var(6.0);
    let cfg = config(r#"{"group_size": 1, "max_iterations": 30}"#);
    let out = run(&d, &cfg, 1, &ReferenceBackend, &exact()).unwrap();
    let sol = reference_solve(&d.model, &exact()).unwrap();
    assert!((out.objective - sol.objective).abs() <= 1e-6, "{} vs {}", out.objective, sol.objective);
    assert!(d.model.is_feasible(&out.x, 1e-9));
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let d = analytic_toy();
    let cfg = config(r#"{"group_size": 1, "max_iterations": 25}"#);
    let a = run(&d, &cfg, 11, &ReferenceBackend, &exact()).unwrap();
    let b = run(&d, &cfg, 11, &ReferenceBackend, &exact()).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.report.multipliers, b.report.multipliers);
    let ka: Vec<_> = a.report.iterations.iter().map(|i| (i.l_k, i.q_bar, i.groups.clone())).collect();
    let kb: Vec<_> = b.report.iterations.iter().map(|i| (i.l_k, i.q_bar, i.groups.clone())).collect();
    assert_eq!(ka, kb);
}

#[test]
fn lower_bound_never_exceeds_primal() {
    let d = analytic_toy();
    let cfg = config(r#"{"group_size": 2, "max_iterations": 60, "initial_multipliers": "zero"}"#);
    let out = run(&d, &cfg, 5, &ReferenceBackend, &exact()).unwrap();
    assert!(out.report.l_best <= TOY_DUAL_OPT + 1e-6);
    if let Some(b) = out.report.certified_bound {
        assert!(b <= out.objective + 1e-6);
    }
    assert!(out.duality_gap() >= -1e-9);
}
