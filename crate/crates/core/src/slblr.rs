//! Surrogate level-based Lagrangian relaxation of the zonal balance rows.
//!
//! The relaxed problem prices balance residuals `R` with multipliers `Λ`
//! and an L1 penalty `c`. Each iteration re-optimizes one group of thermal
//! units against the incumbent, moves `Λ` along `R` with a Polyak step to a
//! level estimate `q̄`, and lowers `q̄` when the multipliers stop
//! converging. A restricted monolithic solve then recovers a feasible plan.

use std::collections::BTreeSet;

use decarb_milp::{
    Constraint, DenseSimplex, LpOptions, LpStatus, MilpBackend, MixedIntegerModel, ModelError, RowId,
    SolveError, SolveOptions, SolveStatus, VarId, VarKind,
};
use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::PlanningModel;
use crate::scenario::{InitialMultipliers, SlblrConfig};

#[derive(Debug, Error)]
pub enum SlblrError {
    #[error("{expected} balance rows but {found} multipliers")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("no thermal units to decompose over")]
    EmptyFleet,
    #[error("monolithic problem is infeasible with every binary free")]
    Infeasible,
    #[error("backend returned status `{0}`")]
    Backend(&'static str),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Variables owned by one thermal unit.
#[derive(Debug, Clone)]
pub struct UnitGroup {
    pub id: String,
    pub vars: Vec<VarId>,
}

/// A monolithic model plus the structure the coordination loop needs.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub model: MixedIntegerModel,
    pub balance_rows: Vec<RowId>,
    pub units: Vec<UnitGroup>,
    /// Continuous power variables held within Δ of the incumbent.
    pub trust_vars: Vec<VarId>,
    pub default_delta: f64,
    /// Binary settings of the commit-all heuristic; binaries not listed
    /// go to their upper bound.
    pub heuristic_fixings: Vec<(VarId, f64)>,
}

impl Decomposition {
    pub fn from_planning(pm: &PlanningModel) -> Self {
        let model = pm.model.clone();
        let units = pm
            .thermal_plans
            .iter()
            .enumerate()
            .map(|(u, _)| UnitGroup {
                id: unit_id(&pm.model, pm.blocks.first().map(|b| b.thermal[u].v[0])),
                vars: pm.thermal_unit_vars(u),
            })
            .collect();
        let trust_vars = pm.non_thermal_power_vars();
        let mut largest: f64 = 0.0;
        for v in model.vars() {
            if (v.name.starts_with("p[") || v.name.starts_with("fp[") || v.name.starts_with("fm[")) && v.upper.is_finite() {
                largest = largest.max(v.upper);
            }
        }
        for plan in pm.renewable_plans.iter().chain(pm.storage_plans.iter().map(|s| &s.power)) {
            for &ic in &plan.ic {
                let v = model.var(ic);
                let cap = if v.upper.is_finite() { v.upper } else { v.lower };
                largest = largest.max(cap);
            }
        }
        let mut heuristic_fixings = Vec::new();
        for plan in &pm.thermal_plans {
            for (j, b) in plan.build.iter().enumerate() {
                if let Some(b) = b {
                    heuristic_fixings.push((*b, if j == 0 { 1.0 } else { 0.0 }));
                }
            }
            for r in plan.retire.iter().flatten() {
                heuristic_fixings.push((*r, 0.0));
            }
        }
        Decomposition {
            model,
            balance_rows: pm.balance.iter().map(|b| b.row).collect(),
            units,
            trust_vars,
            default_delta: (0.1 * largest).max(1e-3),
            heuristic_fixings,
        }
    }
}

fn unit_id(model: &MixedIntegerModel, v: Option<VarId>) -> String {
    let Some(v) = v else { return String::new() };
    let name = &model.var(v).name;
    name.trim_start_matches("v[").split(',').next().unwrap_or(name).to_string()
}

/// Relaxed model: balance rows become `expr − r⁺ + r⁻ = rhs` and the
/// objective gains `(Λ + c)·r⁺ + (c − Λ)·r⁻`.
#[derive(Debug, Clone)]
pub struct RelaxedModel {
    pub model: MixedIntegerModel,
    pub n_orig: usize,
    pub r_plus: Vec<VarId>,
    pub r_minus: Vec<VarId>,
    balance: Vec<Constraint>,
    base_objective: Vec<f64>,
    base_constant: f64,
    lambda: Vec<f64>,
    c: f64,
}

pub fn build_relaxed_model(
    monolithic: &MixedIntegerModel,
    balance_rows: &[RowId],
    lambda: &[f64],
    c: f64,
) -> Result<RelaxedModel, SlblrError> {
    if lambda.len() != balance_rows.len() {
        return Err(SlblrError::DimensionMismatch {
            expected: balance_rows.len(),
            found: lambda.len(),
        });
    }
    if lambda.iter().any(|l| !l.is_finite()) || !c.is_finite() {
        return Err(SlblrError::NonFinite("multiplier"));
    }
    let mut model = monolithic.clone();
    let n_orig = model.num_vars();
    let mut r_plus = Vec::with_capacity(balance_rows.len());
    let mut r_minus = Vec::with_capacity(balance_rows.len());
    let mut balance = Vec::with_capacity(balance_rows.len());
    for &r in balance_rows {
        let row = monolithic.row(r).clone();
        let mut bound = row.rhs.abs();
        for &(v, a) in &row.terms {
            let var = monolithic.var(v);
            bound += a.abs() * var.lower.abs().max(var.upper.abs());
        }
        let bound = if bound.is_finite() { bound.max(1.0) } else { 1e7 };
        let rp = model.add_continuous(format!("rp_{}", row.name), 0.0, bound)?;
        let rm = model.add_continuous(format!("rm_{}", row.name), 0.0, bound)?;
        model.add_row_term(r, rp, -1.0)?;
        model.add_row_term(r, rm, 1.0)?;
        r_plus.push(rp);
        r_minus.push(rm);
        balance.push(row);
    }
    let mut relaxed = RelaxedModel {
        model,
        n_orig,
        r_plus,
        r_minus,
        balance,
        base_objective: monolithic.objective().to_vec(),
        base_constant: monolithic.objective_constant(),
        lambda: Vec::new(),
        c: 0.0,
    };
    relaxed.set_penalties(lambda, c)?;
    Ok(relaxed)
}

impl RelaxedModel {
    pub fn set_penalties(&mut self, lambda: &[f64], c: f64) -> Result<(), SlblrError> {
        if lambda.len() != self.r_plus.len() {
            return Err(SlblrError::DimensionMismatch {
                expected: self.r_plus.len(),
                found: lambda.len(),
            });
        }
        for (i, &l) in lambda.iter().enumerate() {
            self.model.set_objective_coef(self.r_plus[i], l + c);
            self.model.set_objective_coef(self.r_minus[i], c - l);
        }
        self.lambda = lambda.to_vec();
        self.c = c;
        Ok(())
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn penalty(&self) -> f64 {
        self.c
    }

    /// Balance residuals at original-variable values `x`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.balance.iter().map(|r| r.activity(x) - r.rhs).collect()
    }

    /// Monolithic objective `O(x)`.
    pub fn base_value(&self, x: &[f64]) -> f64 {
        self.base_constant + self.base_objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// `O(x) + Λ·R(x) + c‖R(x)‖₁`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let r = self.residuals(x);
        self.base_value(x)
            + r.iter().zip(&self.lambda).map(|(r, l)| r * l).sum::<f64>()
            + self.c * r.iter().map(|r| r.abs()).sum::<f64>()
    }

    /// Extends original values with the minimal residual splits.
    pub fn complete(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x[..self.n_orig].to_vec();
        out.resize(self.model.num_vars(), 0.0);
        for (i, r) in self.residuals(x).into_iter().enumerate() {
            out[self.r_plus[i].0] = r.max(0.0);
            out[self.r_minus[i].0] = (-r).max(0.0);
        }
        out
    }
}

/// The `k`-th (zero-based) subproblem group. Each cycle of
/// `ceil(n / group_size)` groups is a fresh seeded shuffle of all units;
/// members are listed in id order.
pub fn select_subproblem_group(k: usize, ids: &[String], group_size: usize, seed: u64) -> Result<Vec<usize>, SlblrError> {
    let n = ids.len();
    if n == 0 {
        return Err(SlblrError::EmptyFleet);
    }
    let size = group_size.clamp(1, n);
    let groups = n.div_ceil(size);
    let cycle = k / groups;
    let slot = k % groups;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (cycle as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    order.shuffle(&mut rng);
    let mut g: Vec<usize> = order.into_iter().skip(slot * size).take(size).collect();
    g.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    Ok(g)
}

pub fn group_count(n_units: usize, group_size: usize) -> usize {
    n_units.div_ceil(group_size.clamp(1, n_units.max(1)))
}

/// Reasons a step cannot be taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSignal {
    /// Residuals vanished: the point satisfies the relaxed rows.
    Feasible,
    /// The level estimate no longer exceeds the dual value.
    LevelBreach,
}

/// `s = ζ·γ·(q̄ − L)/‖R‖²`.
pub fn compute_stepsize(q_bar: f64, l: f64, r_norm2_sq: f64, zeta: f64, gamma: f64) -> Result<f64, StepSignal> {
    if r_norm2_sq <= 0.0 {
        return Err(StepSignal::Feasible);
    }
    if q_bar <= l {
        return Err(StepSignal::LevelBreach);
    }
    Ok(zeta * gamma * (q_bar - l) / r_norm2_sq)
}

/// `Λ ← Λ + s·R`.
pub fn update_multipliers(lambda: &mut [f64], r: &[f64], s: f64) -> Result<(), SlblrError> {
    if lambda.len() != r.len() {
        return Err(SlblrError::DimensionMismatch {
            expected: lambda.len(),
            found: r.len(),
        });
    }
    if !s.is_finite() || s <= 0.0 || r.iter().any(|x| !x.is_finite()) {
        return Err(SlblrError::NonFinite("step"));
    }
    for (l, r) in lambda.iter_mut().zip(r) {
        *l += s * r;
    }
    Ok(())
}

/// Lowers `q̄` toward `L_best`; `None` once they are within `tol`.
pub fn level_reset(q_bar: f64, l_best: f64, factor: f64, tol: f64) -> Option<f64> {
    if q_bar <= l_best + tol {
        return None;
    }
    Some(l_best + factor * (q_bar - l_best))
}

#[derive(Debug, Clone)]
pub enum SubproblemOutcome {
    Accepted {
        x: Vec<f64>,
        value: f64,
        /// Groups optimized, in merge order.
        groups: Vec<usize>,
        /// Proven lower bound on the relaxed problem when nothing was restricted.
        certified: Option<f64>,
    },
    /// No descent even with every unit free.
    Stall,
}

fn fix_value(model: &MixedIntegerModel, v: VarId, x: f64) -> f64 {
    let var = model.var(v);
    let x = if var.kind == VarKind::Binary { x.round() } else { x };
    x.clamp(var.lower, var.upper)
}

fn restricted(
    relaxed: &RelaxedModel,
    units: &[UnitGroup],
    free_units: &BTreeSet<usize>,
    trust_vars: &[VarId],
    incumbent: &[f64],
    delta: Option<f64>,
) -> Result<MixedIntegerModel, SlblrError> {
    let mut m = relaxed.model.clone();
    for (u, g) in units.iter().enumerate() {
        if free_units.contains(&u) {
            continue;
        }
        for &v in &g.vars {
            let x = fix_value(&relaxed.model, v, incumbent[v.0]);
            m.set_bounds(v, x, x)?;
        }
    }
    if let Some(d) = delta {
        for &v in trust_vars {
            let var = relaxed.model.var(v);
            let x = incumbent[v.0];
            let lo = (x - d).max(var.lower);
            let hi = (x + d).min(var.upper);
            if lo <= hi {
                m.set_bounds(v, lo, hi)?;
            }
        }
    }
    Ok(m)
}

fn solve_relaxed(
    model: &MixedIntegerModel,
    relaxed: &RelaxedModel,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<Option<(Vec<f64>, f64)>, SlblrError> {
    let sol = backend.solve(model, options)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::Feasible => {
            let x = sol.values[..relaxed.n_orig].to_vec();
            Ok(Some((x, sol.bound)))
        }
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(SlblrError::Backend("unbounded")),
        SolveStatus::Limit => Err(SlblrError::Backend("limit")),
    }
}

/// Optimizes group `first` (merging later groups on failure) with all
/// other units fixed at the incumbent. Accepts only a strict decrease of the
/// relaxed objective under the current multipliers.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem(
    relaxed: &RelaxedModel,
    decomp: &Decomposition,
    groups: &[Vec<usize>],
    first: usize,
    incumbent: &[f64],
    delta: Option<f64>,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SubproblemOutcome, SlblrError> {
    let l_inc = relaxed.value(incumbent);
    let tol = 1e-9 * l_inc.abs().max(1.0);
    let mut free = BTreeSet::new();
    let mut used = Vec::new();
    for j in 0..groups.len() {
        let g = (first + j) % groups.len();
        free.extend(groups[g].iter().copied());
        used.push(g);
        let m = restricted(relaxed, &decomp.units, &free, &decomp.trust_vars, incumbent, delta)?;
        let Some((x, bound)) = solve_relaxed(&m, relaxed, backend, options)? else {
            debug!("restricted subproblem infeasible for groups {used:?}");
            continue;
        };
        let value = relaxed.value(&x);
        if value < l_inc - tol {
            let unrestricted = free.len() == decomp.units.len() && (delta.is_none() || decomp.trust_vars.is_empty());
            return Ok(SubproblemOutcome::Accepted {
                x,
                value,
                groups: used,
                certified: unrestricted.then_some(bound),
            });
        }
    }
    Ok(SubproblemOutcome::Stall)
}

/// Binary-settling history of the incumbent sequence.
#[derive(Debug, Clone)]
pub struct BinaryHistory {
    pub vars: Vec<VarId>,
    pub last: Vec<f64>,
    /// Iteration of the latest change of each binary.
    pub last_flip: Vec<usize>,
}

impl BinaryHistory {
    pub fn new(model: &MixedIntegerModel, x: &[f64]) -> Self {
        let vars: Vec<VarId> = model
            .binaries()
            .filter(|&v| model.var(v).lower < model.var(v).upper)
            .collect();
        let last = vars.iter().map(|v| x[v.0].round()).collect();
        BinaryHistory {
            last_flip: vec![0; vars.len()],
            vars,
            last,
        }
    }

    pub fn record(&mut self, k: usize, x: &[f64]) {
        for (i, v) in self.vars.iter().enumerate() {
            let now = x[v.0].round();
            if now != self.last[i] {
                self.last[i] = now;
                self.last_flip[i] = k;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub x: Vec<f64>,
    pub objective: f64,
    pub freed: usize,
    pub attempts: usize,
}

/// Restores the balance rows and solves the monolithic model with binaries
/// fixed at the incumbent. Binaries that flipped during the run (or inside
/// the trailing `window` iterations) are freed most-recently-flipped first,
/// at most `free_fraction` of all binaries; the freed set doubles on
/// infeasibility.
#[allow(clippy::too_many_arguments)]
pub fn recover_primal(
    monolithic: &MixedIntegerModel,
    incumbent: &[f64],
    history: &BinaryHistory,
    k_now: usize,
    window: usize,
    free_fraction: f64,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<Recovery, SlblrError> {
    let n = history.vars.len();
    let name = |i: usize| &monolithic.var(history.vars[i]).name;
    let mut unstable: Vec<usize> = (0..n)
        .filter(|&i| history.last_flip[i] > 0 || k_now.saturating_sub(history.last_flip[i]) < window)
        .collect();
    unstable.sort_by(|&a, &b| history.last_flip[b].cmp(&history.last_flip[a]).then_with(|| name(a).cmp(name(b))));
    let mut stable: Vec<usize> = (0..n).filter(|i| !unstable.contains(i)).collect();
    stable.sort_by(|&a, &b| name(a).cmp(name(b)));
    let order: Vec<usize> = unstable.iter().chain(&stable).copied().collect();
    let cap = (free_fraction * n as f64).ceil() as usize;
    let mut count = unstable.len().min(cap);
    let mut attempts = 0;
    loop {
        attempts += 1;
        let mut m = monolithic.clone();
        for &i in &order[count..] {
            let v = history.vars[i];
            let x = fix_value(monolithic, v, incumbent[v.0]);
            m.set_bounds(v, x, x)?;
        }
        info!("primal recovery attempt {attempts}: {count} of {n} binaries free");
        let sol = backend.solve(&m, options)?;
        match sol.status {
            SolveStatus::Optimal | SolveStatus::Feasible => {
                return Ok(Recovery {
                    objective: monolithic.evaluate_objective(&sol.values),
                    x: sol.values,
                    freed: count,
                    attempts,
                })
            }
            SolveStatus::Infeasible if count < n => count = (2 * count).max(1).min(n),
            SolveStatus::Infeasible => return Err(SlblrError::Infeasible),
            SolveStatus::Unbounded => return Err(SlblrError::Backend("unbounded")),
            SolveStatus::Limit => return Err(SlblrError::Backend("limit")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub l_k: f64,
    pub q_bar: f64,
    pub stepsize: f64,
    pub r_norm1: f64,
    pub r_norm2_sq: f64,
    pub reset: bool,
    pub groups: Vec<String>,
    /// Largest trust-variable move of the accepted candidate.
    pub trust_move: f64,
    pub penalty: f64,
    /// Multipliers after this iteration's update.
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlblrReport {
    pub iterations: Vec<IterationRecord>,
    pub l_best: f64,
    /// Best lower bound from unrestricted relaxed solves.
    pub certified_bound: Option<f64>,
    pub q_bar: f64,
    pub stop_reason: String,
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SlblrOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub recovery: Recovery,
    pub report: SlblrReport,
}

impl SlblrOutcome {
    /// `(primal − bound)/|primal|` against the certified bound when one exists.
    pub fn duality_gap(&self) -> f64 {
        let bound = self.report.certified_bound.unwrap_or(self.report.l_best);
        (self.objective - bound) / self.objective.abs().max(1e-9)
    }
}

/// Negated LP duals of the balance rows; `None` if the LP relaxation fails.
pub fn lp_dual_multipliers(model: &MixedIntegerModel, balance_rows: &[RowId]) -> Option<Vec<f64>> {
    let mut lp = DenseSimplex::new(model, LpOptions::default());
    if lp.solve() != LpStatus::Optimal {
        return None;
    }
    let duals = lp.row_duals();
    Some(balance_rows.iter().map(|r| -duals[r.0]).collect())
}

/// Cost of the commit-all heuristic point, an upper bound on the dual optimum.
pub fn heuristic_upper_bound(decomp: &Decomposition, backend: &dyn MilpBackend, options: &SolveOptions) -> Option<f64> {
    let mut m = decomp.model.clone();
    let fixed: std::collections::HashMap<VarId, f64> = decomp.heuristic_fixings.iter().copied().collect();
    let bins: Vec<VarId> = m.binaries().collect();
    for v in bins {
        let var = m.var(v).clone();
        let x = fixed.get(&v).copied().unwrap_or(var.upper).clamp(var.lower, var.upper);
        m.set_bounds(v, x, x).ok()?;
    }
    let sol = backend.solve(&m, options).ok()?;
    sol.status.has_solution().then(|| m.evaluate_objective(&sol.values))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the coordination loop and primal recovery.
pub fn run(
    decomp: &Decomposition,
    config: &SlblrConfig,
    seed: u64,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SlblrOutcome, SlblrError> {
    if decomp.units.is_empty() {
        return Err(SlblrError::EmptyFleet);
    }
    let nrows = decomp.balance_rows.len();
    let ids: Vec<String> = decomp.units.iter().map(|u| u.id.clone()).collect();
    let ngroups = group_count(ids.len(), config.group_size);
    let gamma = 1.0 / ngroups as f64;
    let mut lambda = match config.initial_multipliers {
        InitialMultipliers::Zero => vec![0.0; nrows],
        InitialMultipliers::LpDual => {
            lp_dual_multipliers(&decomp.model, &decomp.balance_rows).unwrap_or_else(|| vec![0.0; nrows])
        }
    };
    let mut relaxed = build_relaxed_model(&decomp.model, &decomp.balance_rows, &lambda, 0.0)?;

    let (mut x, mut l_k, mut certified) = match solve_relaxed(&relaxed.model, &relaxed, backend, options) {
        Ok(Some((x, bound))) => {
            let v = relaxed.value(&x);
            (x, v, Some(bound.min(v)))
        }
        Ok(None) => return Err(SlblrError::Infeasible),
        Err(SlblrError::Solve(SolveError::TooLarge { .. })) => {
            let lp = lp_start(decomp, backend, options)?;
            let v = relaxed.value(&lp);
            (lp, v, None)
        }
        Err(e) => return Err(e),
    };
    let mut q_bar = heuristic_upper_bound(decomp, backend, options)
        .filter(|q| *q > l_k)
        .unwrap_or(l_k + 0.5 * l_k.abs() + 1.0);
    info!("slblr start: L0 = {l_k:.6}, q̄0 = {q_bar:.6}, {ngroups} groups");
    let mut l_best = l_k;
    let mut history = BinaryHistory::new(&decomp.model, &x);
    let mut delta = config.trust_region_delta.unwrap_or(decomp.default_delta);
    let mut iterations = Vec::new();
    let mut travel = 0.0;
    let mut anchor = lambda.clone();
    let mut since_anchor = 0usize;
    let mut stop_reason = String::from("iteration limit");
    let tol = config.multiplier_convergence_tol;
    let mut k_done = 0;
    // a unit's binaries can only move when its group is optimized
    let window_iters = config.stability_window * ngroups;
    let mut best: Option<Recovery> = None;

    for k in 1..=config.max_iterations {
        let r = relaxed.residuals(&x);
        let r2: f64 = r.iter().map(|v| v * v).sum();
        let mut reset = false;
        let mut stalled = false;
        let s = match compute_stepsize(q_bar, l_k, r2, config.zeta, gamma) {
            Ok(s) => s,
            Err(StepSignal::Feasible) => {
                stop_reason = "balance residuals vanished".into();
                break;
            }
            Err(StepSignal::LevelBreach) => {
                stop_reason = "level reached the best dual value".into();
                break;
            }
        };
        update_multipliers(&mut lambda, &r, s)?;
        let step_norm = s * r2.sqrt();
        travel += step_norm;
        since_anchor += 1;
        let sweep = (k - 1) / ngroups;
        let c = if sweep == 0 || config.l1_penalty_initial == 0.0 {
            0.0
        } else {
            (config.l1_penalty_initial * config.l1_penalty_growth.powi(sweep as i32 - 1)).min(config.l1_penalty_max.max(config.l1_penalty_initial))
        };
        relaxed.set_penalties(&lambda, c)?;

        let groups: Vec<Vec<usize>> = (0..ngroups)
            .map(|g| select_subproblem_group(sweep * ngroups + g, &ids, config.group_size, seed))
            .collect::<Result<_, _>>()?;
        let slot = (k - 1) % ngroups;
        let outcome = solve_subproblem(&relaxed, decomp, &groups, slot, &x, Some(delta), backend, options)?;
        let (new_x, value, used, cert) = match outcome {
            SubproblemOutcome::Accepted { x, value, groups: used, certified } => (x, value, used, certified),
            SubproblemOutcome::Stall => {
                stalled = true;
                match solve_relaxed(&relaxed.model, &relaxed, backend, options) {
                    Ok(Some((fx, bound))) => {
                        let v = relaxed.value(&fx);
                        (fx, v, (0..ngroups).collect(), Some(bound.min(v)))
                    }
                    Ok(None) => return Err(SlblrError::Infeasible),
                    Err(SlblrError::Solve(SolveError::TooLarge { .. })) => (x.clone(), relaxed.value(&x), Vec::new(), None),
                    Err(e) => return Err(e),
                }
            }
        };
        let trust_move = decomp
            .trust_vars
            .iter()
            .map(|v| (new_x[v.0] - x[v.0]).abs())
            .fold(0.0, f64::max);
        x = new_x;
        l_k = value;
        if let Some(b) = cert {
            certified = Some(certified.map_or(b, |c: f64| c.max(b)));
        }
        history.record(k, &x);
        let improved = l_k > l_best;
        if improved {
            l_best = l_k;
            travel = 0.0;
            anchor = lambda.clone();
            since_anchor = 0;
        }
        let displacement = norm2(&lambda.iter().zip(&anchor).map(|(a, b)| a - b).collect::<Vec<_>>());
        if (stalled && !improved) || (since_anchor >= 2 && travel > config.travel_threshold * displacement) {
            reset = true;
        }
        if reset {
            match level_reset(q_bar, l_best, config.gap_halving_factor, tol * l_best.abs().max(1.0)) {
                Some(q) => q_bar = q,
                None => {
                    stop_reason = "level converged to the best dual value".into();
                    reset = false;
                }
            }
            delta *= 0.5;
            travel = 0.0;
            anchor = lambda.clone();
            since_anchor = 0;
        }
        let r_next = relaxed.residuals(&x);
        iterations.push(IterationRecord {
            k,
            l_k,
            q_bar,
            stepsize: s,
            r_norm1: r_next.iter().map(|v| v.abs()).sum(),
            r_norm2_sq: r_next.iter().map(|v| v * v).sum(),
            reset,
            groups: used.iter().flat_map(|&g| groups[g].iter().map(|&u| ids[u].clone())).collect(),
            trust_move,
            penalty: c,
            multipliers: lambda.clone(),
        });
        debug!("k={k} L={l_k:.6} q̄={q_bar:.6} s={s:.3e} |R|²={r2:.3e}");
        k_done = k;
        if k % ngroups == 0 && k >= window_iters {
            match recover_primal(&decomp.model, &x, &history, k, window_iters, config.primal_recovery_free_fraction, backend, options) {
                Ok(r) => {
                    debug!("sweep recovery at k={k}: {:.6}", r.objective);
                    if best.as_ref().is_none_or(|b: &Recovery| r.objective < b.objective) {
                        best = Some(r);
                    }
                }
                Err(e) => debug!("sweep recovery at k={k} failed: {e}"),
            }
        }
        if stop_reason.starts_with("level converged") {
            break;
        }
        let lam_inf = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if q_bar - l_best <= tol * l_best.abs().max(1.0) {
            stop_reason = "level gap within tolerance".into();
            break;
        }
        if step_norm <= tol * lam_inf.max(1.0) * 1e-3 {
            stop_reason = "multipliers converged".into();
            break;
        }
    }
    let recovery = match recover_primal(
        &decomp.model,
        &x,
        &history,
        k_done,
        window_iters,
        config.primal_recovery_free_fraction,
        backend,
        options,
    ) {
        Ok(r) => match best {
            Some(b) if b.objective < r.objective => b,
            _ => r,
        },
        Err(e) => best.ok_or(e)?,
    };
    let report = SlblrReport {
        iterations,
        l_best,
        certified_bound: certified,
        q_bar,
        stop_reason,
        multipliers: lambda,
    };
    Ok(SlblrOutcome {
        objective: recovery.objective,
        x: recovery.x.clone(),
        recovery,
        report,
    })
}

/// LP-relaxation point with binaries rounded, used when the full relaxed
/// problem is too large for the backend.
fn lp_start(decomp: &Decomposition, backend: &dyn MilpBackend, options: &SolveOptions) -> Result<Vec<f64>, SlblrError> {
    let mut lp = DenseSimplex::new(&decomp.model, LpOptions::default());
    if lp.solve() != LpStatus::Optimal {
        return Err(SlblrError::Infeasible);
    }
    let vals = lp.values();
    let mut m = decomp.model.clone();
    let bins: Vec<VarId> = m.binaries().collect();
    for v in bins {
        let x = fix_value(&decomp.model, v, if vals[v.0] > 1e-6 { 1.0 } else { 0.0 });
        m.set_bounds(v, x, x)?;
    }
    let relaxed = build_relaxed_model(&m, &decomp.balance_rows, &vec![0.0; decomp.balance_rows.len()], 0.0)?;
    match solve_relaxed(&relaxed.model, &relaxed, backend, options)? {
        Some((x, _)) => Ok(x),
        None => Err(SlblrError::Infeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepsize_examples() {
        assert_eq!(compute_stepsize(100.0, 90.0, 4.0, 0.5, 0.2), Ok(0.25));
        assert_eq!(compute_stepsize(90.0, 90.0, 4.0, 0.5, 0.2), Err(StepSignal::LevelBreach));
        assert_eq!(compute_stepsize(100.0, 90.0, 0.0, 0.5, 0.2), Err(StepSignal::Feasible));
        let a = compute_stepsize(100.0, 90.0, 4.0, 0.5, 0.2).unwrap();
        let b = compute_stepsize(100.0, 90.0, 8.0, 0.5, 0.2).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
    }

    #[test]
    fn multiplier_update_examples() {
        let mut l = vec![0.0, 0.0];
        update_multipliers(&mut l, &[2.0, -1.0], 0.5).unwrap();
        assert_eq!(l, vec![1.0, -0.5]);
        update_multipliers(&mut l, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(l, vec![1.0, -0.5]);
        assert!(update_multipliers(&mut l, &[f64::NAN, 0.0], 0.5).is_err());
    }

    #[test]
    fn level_reset_examples() {
        assert_eq!(level_reset(100.0, 80.0, 0.5, 1e-9), Some(90.0));
        let mut q = 100.0;
        for _ in 0..60 {
            q = level_reset(q, 80.0, 0.5, 0.0).unwrap_or(q);
        }
        assert!((q - 80.0).abs() < 1e-12);
        assert_eq!(level_reset(80.0, 80.0, 0.5, 1e-9), None);
    }

    #[test]
    fn grouping_partitions_each_cycle() {
        let ids: Vec<String> = (0..6).map(|i| format!("u{i}")).collect();
        for cycle in 0..3 {
            let mut seen = BTreeSet::new();
            for g in 0..3 {
                let grp = select_subproblem_group(cycle * 3 + g, &ids, 2, 11).unwrap();
                assert_eq!(grp.len(), 2);
                for u in grp {
                    assert!(seen.insert(u));
                }
            }
            assert_eq!(seen.len(), 6);
        }
        let a: Vec<_> = (0..9).map(|k| select_subproblem_group(k, &ids, 2, 5).unwrap()).collect();
        let b: Vec<_> = (0..9).map(|k| select_subproblem_group(k, &ids, 2, 5).unwrap()).collect();
        assert_eq!(a, b);
        assert_eq!(select_subproblem_group(4, &ids, 6, 1).unwrap(), (0..6).collect::<Vec<_>>());
        assert!(select_subproblem_group(0, &[], 1, 1).is_err());
    }
}
