//! Scenario to results: build, solve (decomposed or exact), tabulate.

use std::fmt;

use decarb_milp::{
    reference_solve, DenseSimplex, LpOptions, LpStatus, MilpBackend, MixedIntegerModel, RowId, SolveError,
    SolveOptions, SolveStatus,
};
use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{build_planning_model, PlanningModel};
use crate::results::{ResultSet, SolveMeta};
use crate::scenario::ScenarioConfig;
use crate::slblr::{self, Decomposition, SlblrError};
use crate::uc::BuildError;

#[derive(Debug, Clone, Default)]
pub struct SolveRequest {
    pub oracle: bool,
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    pub gap_tol: Option<f64>,
}

/// Policy rows whose removal restores LP feasibility.
#[derive(Debug, Clone, Serialize)]
pub struct InfeasibilityReport {
    pub scenario: String,
    pub implicated: Vec<String>,
    pub message: String,
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scenario `{}` is infeasible: {}", self.scenario, self.message)?;
        if !self.implicated.is_empty() {
            write!(f, " (implicated: {})", self.implicated.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("{0}")]
    Infeasible(InfeasibilityReport),
    #[error(transparent)]
    Slblr(SlblrError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("solver stopped without a solution ({0})")]
    NoSolution(&'static str),
}

fn lp_feasible(model: &MixedIntegerModel) -> bool {
    let mut lp = DenseSimplex::new(model, LpOptions::default());
    lp.solve() == LpStatus::Optimal
}

/// Finds an irreducible set of policy rows (emissions caps, renewable
/// standards, reserve margins) that makes the LP relaxation infeasible,
/// by a deletion filter over the policy rows.
pub fn diagnose_infeasibility(cfg: &ScenarioConfig, pm: &PlanningModel) -> InfeasibilityReport {
    let policy: Vec<RowId> = pm
        .emissions_rows
        .iter()
        .chain(&pm.rps_rows)
        .chain(&pm.prm_rows)
        .flatten()
        .copied()
        .collect();
    let report = |implicated: Vec<String>, message: String| InfeasibilityReport {
        scenario: cfg.id.clone(),
        implicated,
        message,
    };
    if lp_feasible(&pm.model) {
        return report(
            Vec::new(),
            "no integer-feasible plan exists although the continuous relaxation is feasible".into(),
        );
    }
    if !lp_feasible(&pm.model.without_rows(&policy)) {
        return report(
            Vec::new(),
            "the plan is infeasible even without emissions, renewable and reserve-margin constraints".into(),
        );
    }
    let mut kept: Vec<RowId> = policy.clone();
    for &r in &policy {
        let trial: Vec<RowId> = kept.iter().copied().filter(|&k| k != r).collect();
        let dropped: Vec<RowId> = policy.iter().copied().filter(|p| !trial.contains(p)).collect();
        if !lp_feasible(&pm.model.without_rows(&dropped)) {
            kept = trial;
        }
    }
    let implicated: Vec<String> = kept.iter().map(|&r| pm.model.row(r).name.clone()).collect();
    let message = format!("{} policy constraint(s) cannot be met together", implicated.len());
    report(implicated, message)
}

fn options(req: &SolveRequest) -> SolveOptions {
    let mut o = SolveOptions::default();
    if let Some(g) = req.gap_tol {
        o.relative_gap_tol = g;
    }
    o
}

/// Builds and solves a scenario. The oracle path runs the bundled
/// branch-and-bound on the monolithic model; otherwise the decomposition
/// runs on `backend`.
pub fn solve_scenario(
    cfg: &ScenarioConfig,
    req: &SolveRequest,
    backend: &dyn MilpBackend,
) -> Result<(ResultSet, PlanningModel), PipelineError> {
    let pm = build_planning_model(cfg)?;
    let seed = req.seed.unwrap_or(cfg.seed);
    let opts = options(req);
    info!(
        "model `{}`: {} vars, {} rows, {} free binaries",
        cfg.id,
        pm.model.num_vars(),
        pm.model.num_rows(),
        pm.model.num_free_binaries()
    );
    if req.oracle {
        let sol = reference_solve(&pm.model, &opts)?;
        let status = match sol.status {
            SolveStatus::Optimal | SolveStatus::Feasible => sol.status.as_str().to_string(),
            SolveStatus::Infeasible => return Err(PipelineError::Infeasible(diagnose_infeasibility(cfg, &pm))),
            SolveStatus::Unbounded => return Err(PipelineError::NoSolution("unbounded")),
            SolveStatus::Limit => return Err(PipelineError::NoSolution("limit")),
        };
        let meta = SolveMeta {
            method: "oracle".into(),
            seed,
            status,
            lower_bound: Some(sol.bound),
            lower_bound_certified: true,
            iterations: Vec::new(),
            stop_reason: None,
        };
        let rs = ResultSet::from_solution(cfg, &pm, &sol.values, meta);
        return Ok((rs, pm));
    }
    let decomp = Decomposition::from_planning(&pm);
    let mut config = cfg.slblr.clone();
    if let Some(k) = req.max_iterations {
        config.max_iterations = k;
    }
    let out = match slblr::run(&decomp, &config, seed, backend, &opts) {
        Ok(o) => o,
        Err(SlblrError::Infeasible) => return Err(PipelineError::Infeasible(diagnose_infeasibility(cfg, &pm))),
        Err(e) => return Err(PipelineError::Slblr(e)),
    };
    let certified = out.report.certified_bound.is_some();
    let meta = SolveMeta {
        method: "slblr".into(),
        seed,
        status: "feasible".into(),
        lower_bound: Some(out.report.certified_bound.unwrap_or(out.report.l_best)),
        lower_bound_certified: certified,
        iterations: out.report.iterations.clone(),
        stop_reason: Some(out.report.stop_reason.clone()),
    };
    let rs = ResultSet::from_solution(cfg, &pm, &out.x, meta);
    Ok((rs, pm))
}
