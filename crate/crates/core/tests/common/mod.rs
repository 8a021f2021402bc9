#![allow(dead_code)]

use std::collections::HashMap;

use decarb_core::sampler::{WeekFeatureHistogram, WEEKS_PER_YEAR};
use decarb_core::scenario::ThermalUnit;
use decarb_core::slblr::{Decomposition, UnitGroup};
use decarb_core::uc::{build_thermal_constraints, declare_thermal, Block};
use decarb_milp::{DenseSimplex, LinExpr, LpOptions, LpStatus, MixedIntegerModel, Sense};

#[derive(Debug, Clone, Copy)]
pub struct UnitParams {
    pub pmin: f64,
    pub pmax: f64,
    pub ru: f64,
    pub rd: f64,
    pub su: f64,
    pub sd: f64,
    pub ut: usize,
    pub dt: usize,
}

pub fn thermal_unit(p: &UnitParams) -> ThermalUnit {
    serde_json::from_value(serde_json::json!({
        "id": "g",
        "zone_id": "z",
        "p_min": p.pmin,
        "p_max": p.pmax,
        "min_uptime": p.ut,
        "min_downtime": p.dt,
        "ramp_up": p.ru,
        "ramp_down": p.rd,
        "startup_limit": p.su,
        "shutdown_limit": p.sd,
        "planned_status_by_year": 1.0,
        "ten_minute_ramp": 0.0
    }))
    .unwrap()
}

pub fn pattern(bits: u32, n: usize) -> Vec<bool> {
    (0..n).map(|t| bits >> t & 1 == 1).collect()
}

/// Every maximal circular on-run lasts at least `ut` hours and every
/// off-run at least `dt` hours.
pub fn runs_ok(v: &[bool], ut: usize, dt: usize) -> bool {
    let n = v.len();
    let Some(start) = (0..n).find(|&t| v[t] != v[(t + n - 1) % n]) else {
        return true;
    };
    let mut len = 0;
    for k in 0..n {
        let t = (start + k) % n;
        len += 1;
        let next = (t + 1) % n;
        if v[next] != v[t] {
            let need = if v[t] { ut } else { dt };
            if len < need {
                return false;
            }
            len = 0;
        }
    }
    true
}

/// Output bounds per hour implied by the commitment pattern: zero when off,
/// otherwise `[pmin, pmax]` tightened to the start-up limit in the first
/// hour of a run and the shut-down limit in its last hour.
pub fn output_bounds(v: &[bool], p: &UnitParams) -> Vec<(f64, f64)> {
    let n = v.len();
    (0..n)
        .map(|t| {
            if !v[t] {
                return (0.0, 0.0);
            }
            let mut hi = p.pmax;
            if !v[(t + n - 1) % n] {
                hi = hi.min(p.su);
            }
            if !v[(t + 1) % n] {
                hi = hi.min(p.sd);
            }
            (p.pmin, hi)
        })
        .collect()
}

/// Whether some output profile meets the bounds and the hour-to-hour ramp
/// limits inside runs. Difference constraints `x_j − x_i ≤ c` checked for a
/// negative cycle with Bellman-Ford; node `n` is the zero reference.
pub fn power_ok(v: &[bool], p: &UnitParams) -> bool {
    let n = v.len();
    let bounds = output_bounds(v, p);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (t, &(lo, hi)) in bounds.iter().enumerate() {
        if lo > hi {
            return false;
        }
        edges.push((n, t, hi));
        edges.push((t, n, -lo));
        let tp = (t + n - 1) % n;
        if v[t] && v[tp] && n > 1 {
            edges.push((tp, t, p.ru));
            edges.push((t, tp, p.rd));
        }
    }
    let mut dist = vec![0.0f64; n + 1];
    for _ in 0..=n {
        let mut changed = false;
        for &(a, b, c) in &edges {
            if dist[a] + c < dist[b] - 1e-9 {
                dist[b] = dist[a] + c;
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
    false
}

pub fn rule_feasible(v: &[bool], p: &UnitParams) -> bool {
    runs_ok(v, p.ut, p.dt) && power_ok(v, p)
}

/// Direct check of a full (commitment, output) point against the rules.
pub fn point_ok(v: &[bool], out: &[f64], p: &UnitParams, tol: f64) -> bool {
    let n = v.len();
    if !runs_ok(v, p.ut, p.dt) {
        return false;
    }
    let bounds = output_bounds(v, p);
    for t in 0..n {
        let (lo, hi) = bounds[t];
        if out[t] < lo - tol || out[t] > hi + tol {
            return false;
        }
        let tp = (t + n - 1) % n;
        if v[t] && v[tp] && (out[t] - out[tp] > p.ru + tol || out[tp] - out[t] > p.rd + tol) {
            return false;
        }
    }
    true
}

/// Builds the single-unit commitment model, fixes `v` (and `out` when
/// given) and reports LP feasibility of the remaining variables.
pub fn model_feasible(v: &[bool], out: Option<&[f64]>, p: &UnitParams) -> bool {
    let unit = thermal_unit(p);
    let block = Block {
        year: 2023,
        week: 1,
        hours: v.len(),
    };
    let mut m = MixedIntegerModel::new("uc");
    let x = declare_thermal(&mut m, &unit, &block, true).unwrap();
    build_thermal_constraints(&mut m, &unit, &x, &block).unwrap();
    for (t, &on) in v.iter().enumerate() {
        let b = if on { 1.0 } else { 0.0 };
        m.set_bounds(x.v[t], b, b).unwrap();
    }
    if let Some(out) = out {
        for (t, &q) in out.iter().enumerate() {
            if m.set_bounds(x.p[t], q, q).is_err() {
                return false;
            }
        }
    }
    let mut lp = DenseSimplex::new(&m, LpOptions::default());
    lp.solve() == LpStatus::Optimal
}

pub const TOY_LAMBDA_STAR: f64 = -30.5;
pub const TOY_DUAL_OPT: f64 = 272.5;

/// One hour, two units, load 15. Unit a: 20 v + 10 p, unit b: 5 v + 30 p,
/// both with p ≤ 10 v.
pub fn analytic_toy() -> Decomposition {
    let mut m = MixedIntegerModel::new("two_unit");
    let va = m.add_binary("v[a]").unwrap();
    let pa = m.add_continuous("p[a]", 0.0, 10.0).unwrap();
    let vb = m.add_binary("v[b]").unwrap();
    let pb = m.add_continuous("p[b]", 0.0, 10.0).unwrap();
    let mut e = LinExpr::term(pa, 1.0);
    e.add_term(va, -10.0);
    m.add_row("cap[a]", &e, Sense::Le, 0.0).unwrap();
    let mut e = LinExpr::term(pb, 1.0);
    e.add_term(vb, -10.0);
    m.add_row("cap[b]", &e, Sense::Le, 0.0).unwrap();
    let mut e = LinExpr::term(pa, 1.0);
    e.add_term(pb, 1.0);
    let bal = m.add_row("balance", &e, Sense::Eq, 15.0).unwrap();
    let mut o = LinExpr::term(va, 20.0);
    o.add_term(pa, 10.0).add_term(vb, 5.0).add_term(pb, 30.0);
    m.add_objective(&o, 1.0);
    Decomposition {
        model: m,
        balance_rows: vec![bal],
        units: vec![
            UnitGroup {
                id: "a".into(),
                vars: vec![va, pa],
            },
            UnitGroup {
                id: "b".into(),
                vars: vec![vb, pb],
            },
        ],
        trust_vars: vec![],
        default_delta: 1.0,
        heuristic_fixings: vec![],
    }
}

/// Dual function of the analytic toy, from its four commitment patterns.
pub fn toy_dual(lambda: f64) -> f64 {
    let unit = |fixed: f64, slope: f64| (fixed + 10.0 * (slope + lambda)).min(0.0);
    -15.0 * lambda + unit(20.0, 10.0) + unit(5.0, 30.0)
}

/// Best L1 distance over all week subsets of size `k`, each solved as an LP
/// in the weights.
pub fn exhaustive_distance(hist: &WeekFeatureHistogram, k: usize) -> f64 {
    let n = hist.weeks.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let mut p = minilp::Problem::new(minilp::OptimizationDirection::Minimize);
        let w: Vec<minilp::Variable> = chosen.iter().map(|_| p.add_var(0.0, (0.0, WEEKS_PER_YEAR))).collect();
        p.add_constraint(w.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), minilp::ComparisonOp::Eq, WEEKS_PER_YEAR);
        for (b, &y) in hist.yearly_freq.iter().enumerate() {
            let ep = p.add_var(1.0, (0.0, f64::INFINITY));
            let em = p.add_var(1.0, (0.0, f64::INFINITY));
            let mut terms: Vec<(minilp::Variable, f64)> = chosen
                .iter()
                .zip(&w)
                .map(|(&i, &v)| (v, hist.weekly_freq[i][b] / WEEKS_PER_YEAR))
                .collect();
            terms.push((ep, 1.0));
            terms.push((em, -1.0));
            p.add_constraint(terms, minilp::ComparisonOp::Eq, y);
        }
        let sol = p.solve().unwrap();
        best = best.min(sol.objective());
    }
    best
}

/// Minimal free-format MPS reader: objective coefficients, objective
/// constant, and row coefficients by name.
#[derive(Debug, Default)]
pub struct MpsFile {
    pub objective_row: String,
    pub row_kinds: HashMap<String, char>,
    pub row_order: Vec<String>,
    pub coefs: HashMap<String, Vec<(String, f64)>>,
    pub rhs: HashMap<String, f64>,
    pub integer_columns: Vec<String>,
}

pub fn read_mps(text: &str) -> MpsFile {
    let mut f = MpsFile::default();
    let mut section = "";
    let mut integer = false;
    for line in text.lines() {
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        if !line.starts_with(' ') {
            section = line.split_whitespace().next().unwrap_or("");
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match section {
            "ROWS" => {
                let kind = tok[0].chars().next().unwrap();
                if kind == 'N' {
                    f.objective_row = tok[1].to_string();
                } else {
                    f.row_order.push(tok[1].to_string());
                }
                f.row_kinds.insert(tok[1].to_string(), kind);
            }
            "COLUMNS" => {
                if tok.get(1) == Some(&"'MARKER'") {
                    integer = tok[2] == "'INTORG'";
                    continue;
                }
                if integer && f.integer_columns.last().map(String::as_str) != Some(tok[0]) {
                    f.integer_columns.push(tok[0].to_string());
                }
                for pair in tok[1..].chunks(2) {
                    let v: f64 = pair[1].parse().unwrap();
                    f.coefs.entry(tok[0].to_string()).or_default().push((pair[0].to_string(), v));
                }
            }
            "RHS" => {
                for pair in tok[1..].chunks(2) {
                    f.rhs.insert(pair[0].to_string(), pair[1].parse().unwrap());
                }
            }
            _ => {}
        }
    }
    f
}

impl MpsFile {
    pub fn objective_at(&self, x: &HashMap<String, f64>) -> f64 {
        let mut z = -self.rhs.get(&self.objective_row).copied().unwrap_or(0.0);
        for (col, entries) in &self.coefs {
            for (row, a) in entries {
                if *row == self.objective_row {
                    z += a * x.get(col).copied().unwrap_or(0.0);
                }
            }
        }
        z
    }

    pub fn row_activity(&self, x: &HashMap<String, f64>) -> HashMap<String, f64> {
        let mut act: HashMap<String, f64> = HashMap::new();
        for (col, entries) in &self.coefs {
            for (row, a) in entries {
                if *row != self.objective_row {
                    *act.entry(row.clone()).or_default() += a * x.get(col).copied().unwrap_or(0.0);
                }
            }
        }
        act
    }
}
