use std::collections::HashMap;

use decarb_milp::{
    emit_mps, parse_mps, parse_solution, write_solution, LinExpr, MixedIntegerModel, Sense, SolutionVector,
    SolveError, SolveStatus, VarKind,
};
use proptest::prelude::*;

/// Minimal whitespace MPS reader written independently of the crate's parser:
/// returns objective coefficients, objective constant, integer flags and bounds.
struct Parsed {
    obj: HashMap<String, f64>,
    constant: f64,
    integer: HashMap<String, bool>,
    bounds: HashMap<String, (f64, f64)>,
    rows: HashMap<String, (char, f64, HashMap<String, f64>)>,
}

fn read(text: &str) -> Parsed {
    let mut p = Parsed {
        obj: HashMap::new(),
        constant: 0.0,
        integer: HashMap::new(),
        bounds: HashMap::new(),
        rows: HashMap::new(),
    };
    let mut section = "";
    let mut objrow = String::new();
    let mut int = false;
    for line in text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            section = f[0];
            continue;
        }
        match section {
            "ROWS" => {
                if f[0] == "N" {
                    objrow = f[1].to_string();
                } else {
                    p.rows.insert(f[1].into(), (f[0].chars().next().unwrap(), 0.0, HashMap::new()));
                }
            }
            "COLUMNS" => {
                if f[1] == "'MARKER'" {
                    int = f[2] == "'INTORG'";
                    continue;
                }
                p.integer.insert(f[0].into(), int);
                p.bounds.entry(f[0].into()).or_insert((0.0, if int { 1.0 } else { f64::INFINITY }));
                let val: f64 = f[2].parse().unwrap();
                if f[1] == objrow {
                    *p.obj.entry(f[0].into()).or_insert(0.0) += val;
                } else {
                    p.rows.get_mut(f[1]).unwrap().2.insert(f[0].into(), val);
                }
            }
            "RHS" => {
                let val: f64 = f[2].parse().unwrap();
                if f[1] == objrow {
                    p.constant = -val;
                } else {
                    p.rows.get_mut(f[1]).unwrap().1 = val;
                }
            }
            "BOUNDS" => {
                let b = p.bounds.get_mut(f[2]).unwrap();
                let v = || f[3].parse::<f64>().unwrap();
                match f[0] {
                    "UP" => b.1 = v(),
                    "LO" => b.0 = v(),
                    "FX" => *b = (v(), v()),
                    "FR" => *b = (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => b.0 = f64::NEG_INFINITY,
                    "BV" => *b = (0.0, 1.0),
                    other => panic!("unexpected bound {other}"),
                }
            }
            _ => {}
        }
    }
    p
}

fn sample_model(coefs: &[(f64, f64, f64)], constant: f64) -> MixedIntegerModel {
    let mut m = MixedIntegerModel::new("sample");
    let mut e = LinExpr::new();
    for (j, &(c, a, ub)) in coefs.iter().enumerate() {
        let v = if j % 3 == 0 {
            m.add_binary(format!("on[u{j},2030,w1,h{j}]")).unwrap()
        } else if j % 3 == 1 {
            m.add_continuous(format!("p[u{j}]"), -ub, ub).unwrap()
        } else {
            m.add_continuous(format!("f[l{j}]"), f64::NEG_INFINITY, f64::INFINITY).unwrap()
        };
        m.set_objective_coef(v, c);
        e.add_term(v, a);
    }
    m.set_objective_constant(constant);
    m.add_row("balance[z1,h0]", &e, Sense::Eq, 1.25).unwrap();
    m.add_row("cap", &e, Sense::Le, 1e7).unwrap();
    m
}

proptest! {
    #[test]
    fn independent_reader_agrees_on_objective(
        coefs in prop::collection::vec((-1e6f64..1e6, -50.0f64..50.0, 0.5f64..1e4), 1..12),
        constant in -1e9f64..1e9,
        assign in prop::collection::vec(-10.0f64..10.0, 12),
    ) {
        let m = sample_model(&coefs, constant);
        let text = emit_mps(&m);
        let parsed = read(&text);
        let x: Vec<f64> = m.vars().iter().enumerate().map(|(j, v)| {
            if v.kind == VarKind::Binary { (assign[j] > 0.0) as u8 as f64 } else { assign[j] }
        }).collect();
        let ours = m.evaluate_objective(&x);
        let mut theirs = parsed.constant;
        for (j, v) in m.vars().iter().enumerate() {
            theirs += parsed.obj.get(&v.name).copied().unwrap_or(0.0) * x[j];
            prop_assert_eq!(parsed.integer[&v.name], v.kind == VarKind::Binary);
            prop_assert_eq!(parsed.bounds[&v.name], (v.lower, v.upper));
        }
        prop_assert!((ours - theirs).abs() <= 1e-9 * ours.abs().max(1.0));
        let (sense, rhs, terms) = &parsed.rows["balance[z1,h0]"];
        prop_assert_eq!(*sense, 'E');
        prop_assert_eq!(*rhs, 1.25);
        prop_assert_eq!(terms.len(), m.row(decarb_milp::RowId(0)).terms.len());
    }

    #[test]
    fn own_parser_restores_the_model(
        coefs in prop::collection::vec((-1e6f64..1e6, -50.0f64..50.0, 0.5f64..1e4), 1..12),
        constant in -1e9f64..1e9,
    ) {
        let m = sample_model(&coefs, constant);
        let back = parse_mps(&emit_mps(&m)).unwrap();
        prop_assert_eq!(back.vars(), m.vars());
        prop_assert_eq!(back.rows(), m.rows());
        prop_assert_eq!(back.objective(), m.objective());
        prop_assert_eq!(back.objective_constant(), m.objective_constant());
    }
}

#[test]
fn emission_is_deterministic() {
    let m = sample_model(&[(1.0, 2.0, 3.0), (0.1, 1e-7, 5.0), (3e20, 4.0, 1.0)], 12.5);
    assert_eq!(emit_mps(&m), emit_mps(&m.clone()));
}

#[test]
fn long_and_spaced_names_are_sanitized() {
    let mut m = MixedIntegerModel::new("names");
    let long = "x".repeat(300);
    m.add_continuous(long.clone(), 0.0, 1.0).unwrap();
    m.add_continuous("has space", 0.0, 1.0).unwrap();
    let text = emit_mps(&m);
    for line in text.lines() {
        for field in line.split_whitespace() {
            assert!(field.len() <= 255);
        }
    }
    let back = parse_mps(&text).unwrap();
    assert_eq!(back.num_vars(), 2);
    assert!(back.var_id("has_space").is_some());
    // a solution written with emitted names maps back onto the original model
    let sol = parse_solution(&format!("# status: optimal\nhas_space 1\n{} 0.5\n", &long[..255]), &m).unwrap();
    assert_eq!(sol.values, vec![0.5, 1.0]);
}

#[test]
fn solution_file_round_trip() {
    let m = sample_model(&[(1.0, 2.0, 3.0), (0.5, 1.0, 5.0)], 0.0);
    let sol = SolutionVector {
        status: SolveStatus::Optimal,
        values: vec![1.0, -2.5],
        objective: -0.25,
        bound: -0.25,
    };
    let text = write_solution(&sol, &m);
    assert!(text.starts_with("# status: optimal\n"));
    let back = parse_solution(&text, &m).unwrap();
    assert_eq!(back.status, SolveStatus::Optimal);
    assert_eq!(back.values, sol.values);
    assert_eq!(back.objective, -0.25);
}

#[test]
fn malformed_solution_line_is_reported_with_its_number() {
    let m = sample_model(&[(1.0, 2.0, 3.0)], 0.0);
    let err = parse_solution("# status: optimal\n\nx 1 2\n", &m).unwrap_err();
    assert!(matches!(err, SolveError::MalformedSolution { line: 3, .. }), "{err}");
    let err = parse_solution("# status: optimal\non[u0,2030,w1,h0] abc\n", &m).unwrap_err();
    assert!(matches!(err, SolveError::MalformedSolution { line: 2, .. }));
}

#[test]
fn unknown_names_skipped_and_missing_default_to_zero() {
    let m = sample_model(&[(1.0, 2.0, 3.0), (0.5, 1.0, 5.0)], 0.0);
    let sol = parse_solution("# status: feasible\nghost 4\np[u1] 2\n", &m).unwrap();
    assert_eq!(sol.status, SolveStatus::Feasible);
    assert_eq!(sol.values, vec![0.0, 2.0]);
}
