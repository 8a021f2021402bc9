use decarb_milp::{DenseSimplex, LinExpr, LpOptions, LpStatus, MixedIntegerModel, Sense};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct RandomLp {
    cost: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, u8, f64)>,
}

fn random_lp() -> impl Strategy<Value = RandomLp> {
    (2usize..7, 1usize..7).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5i32..6, n),
            prop::collection::vec((-3i32..1, 0i32..6, 0u8..5), n),
            prop::collection::vec((prop::collection::vec(-4i32..5, n), 0u8..3, -6i32..10), m),
        )
            .prop_map(|(c, b, r)| RandomLp {
                cost: c.into_iter().map(f64::from).collect(),
                bounds: b
                    .into_iter()
                    .map(|(l, u, kind)| match kind {
                        0 => (f64::NEG_INFINITY, f64::from(u)),
                        1 => (f64::from(l), f64::INFINITY),
                        _ => (f64::from(l), f64::from(l) + f64::from(u)),
                    })
                    .collect(),
                rows: r
                    .into_iter()
                    .map(|(a, s, b)| (a.into_iter().map(f64::from).collect(), s, f64::from(b)))
                    .collect(),
            })
    })
}

fn sense(s: u8) -> Sense {
    match s {
        0 => Sense::Le,
        1 => Sense::Ge,
        _ => Sense::Eq,
    }
}

fn build(lp: &RandomLp) -> MixedIntegerModel {
    let mut m = MixedIntegerModel::new("rand");
    let vars: Vec<_> = lp
        .bounds
        .iter()
        .enumerate()
        .map(|(j, &(l, u))| m.add_continuous(format!("x{j}"), l, u).unwrap())
        .collect();
    for (j, &c) in lp.cost.iter().enumerate() {
        m.set_objective_coef(vars[j], c);
    }
    for (i, (a, s, b)) in lp.rows.iter().enumerate() {
        let mut e = LinExpr::new();
        for (j, &aj) in a.iter().enumerate() {
            e.add_term(vars[j], aj);
        }
        m.add_row(format!("r{i}"), &e, sense(*s), *b).unwrap();
    }
    m
}

enum Oracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

fn oracle(lp: &RandomLp) -> Oracle {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = lp
        .bounds
        .iter()
        .zip(&lp.cost)
        .map(|(&b, &c)| p.add_var(c, b))
        .collect();
    for (a, s, b) in &lp.rows {
        let op = match s {
            0 => ComparisonOp::Le,
            1 => ComparisonOp::Ge,
            _ => ComparisonOp::Eq,
        };
        let terms: Vec<_> = vars.iter().copied().zip(a.iter().copied()).collect();
        p.add_constraint(terms.as_slice(), op, *b);
    }
    match p.solve() {
        Ok(s) if s.objective().is_finite() => Oracle::Optimal(s.objective()),
        Ok(_) => Oracle::Unbounded,
        Err(minilp::Error::Infeasible) => Oracle::Infeasible,
        Err(minilp::Error::Unbounded) => Oracle::Unbounded,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_independent_lp_solver(lp in random_lp()) {
        let model = build(&lp);
        let mut s = DenseSimplex::new(&model, LpOptions::default());
        let status = s.solve();
        match oracle(&lp) {
            Oracle::Optimal(z) => {
                prop_assert_eq!(status, LpStatus::Optimal);
                prop_assert!((s.objective() - z).abs() <= 1e-6 * z.abs().max(1.0),
                    "ours {} oracle {}", s.objective(), z);
                let x = s.values();
                prop_assert!(model.max_row_violation(&x) <= 1e-7);
                prop_assert!(model.max_bound_violation(&x) <= 1e-7);
            }
            Oracle::Infeasible => prop_assert_eq!(status, LpStatus::Infeasible),
            Oracle::Unbounded => prop_assert_eq!(status, LpStatus::Unbounded),
        }
    }

    #[test]
    fn warm_start_after_bound_change_matches_cold_start(lp in random_lp(), pick in 0usize..6, cut in 0i32..4) {
        let model = build(&lp);
        let mut warm = DenseSimplex::new(&model, LpOptions::default());
        warm.solve();
        let j = pick % lp.bounds.len();
        let (l, u) = lp.bounds[j];
        let nu = (l.max(-3.0) + f64::from(cut)).min(u);
        if nu < l { return Ok(()); }
        warm.set_bounds(j, l, nu);
        let ws = warm.solve();
        let mut changed = model.clone();
        changed.set_bounds(decarb_milp::VarId(j), l, nu).unwrap();
        let mut cold = DenseSimplex::new(&changed, LpOptions::default());
        let cs = cold.solve();
        prop_assert_eq!(ws, cs);
        if cs == LpStatus::Optimal {
            prop_assert!((warm.objective() - cold.objective()).abs() <= 1e-6 * cold.objective().abs().max(1.0));
        }
    }
}

#[test]
fn row_duals_are_rhs_sensitivities() {
    // min 2x + 3y  s.t.  x + y >= 4,  x <= 3,  x,y >= 0  -> x=3, y=1
    let mut m = MixedIntegerModel::new("d");
    let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
    let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
    m.set_objective_coef(x, 2.0);
    m.set_objective_coef(y, 3.0);
    let mut e = LinExpr::var(x);
    e.add_term(y, 1.0);
    m.add_row("demand", &e, Sense::Ge, 4.0).unwrap();
    m.add_row("cap", &LinExpr::var(x), Sense::Le, 3.0).unwrap();
    let mut s = DenseSimplex::new(&m, LpOptions::default());
    assert_eq!(s.solve(), LpStatus::Optimal);
    assert!((s.objective() - 9.0).abs() < 1e-9);
    let duals = s.row_duals();
    assert!((duals[0] - 3.0).abs() < 1e-9, "{duals:?}");
    assert!((duals[1] + 1.0).abs() < 1e-9, "{duals:?}");
}

#[test]
fn free_variable_and_equality() {
    // min x  s.t.  x - y = -2,  0 <= y <= 5, x free  -> x = -2
    let mut m = MixedIntegerModel::new("f");
    let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
    let y = m.add_continuous("y", 0.0, 5.0).unwrap();
    m.set_objective_coef(x, 1.0);
    let mut e = LinExpr::var(x);
    e.add_term(y, -1.0);
    m.add_row("eq", &e, Sense::Eq, -2.0).unwrap();
    let mut s = DenseSimplex::new(&m, LpOptions::default());
    assert_eq!(s.solve(), LpStatus::Optimal);
    assert!((s.objective() + 2.0).abs() < 1e-9);
}
