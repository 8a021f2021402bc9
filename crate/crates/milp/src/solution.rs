//! Solver options, solution vectors and the plain-text solution format.
//!
//! A solution file starts with `# status: <word>` and optional
//! `# objective: <value>` comments, followed by one `name value` pair per
//! line. Blank lines and other `#` comments are ignored.

use std::fmt::Write as _;
use std::time::Duration;

use log::warn;

use crate::error::SolveError;
use crate::model::MixedIntegerModel;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub relative_gap_tol: f64,
    pub time_limit: Option<Duration>,
    pub threads: usize,
    pub feasibility_tol: f64,
    /// Reference solver refuses models with more free binaries than this.
    pub max_binaries: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            relative_gap_tol: 1e-4,
            time_limit: None,
            threads: 1,
            feasibility_tol: 1e-6,
            max_binaries: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Limit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        }
    }

    pub fn parse(s: &str) -> Option<SolveStatus> {
        Some(match s.to_ascii_lowercase().as_str() {
            "optimal" => SolveStatus::Optimal,
            "feasible" => SolveStatus::Feasible,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            "limit" | "time_limit" | "timelimit" => SolveStatus::Limit,
            _ => return None,
        })
    }

    pub fn has_solution(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone)]
pub struct SolutionVector {
    pub status: SolveStatus,
    /// One value per model variable, in index order.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Proven lower bound on the optimum (minimization).
    pub bound: f64,
}

impl SolutionVector {
    pub fn empty(status: SolveStatus, n: usize) -> Self {
        SolutionVector {
            status,
            values: vec![0.0; n],
            objective: f64::INFINITY,
            bound: f64::NEG_INFINITY,
        }
    }

    pub fn relative_gap(&self) -> f64 {
        if !self.status.has_solution() {
            return f64::INFINITY;
        }
        (self.objective - self.bound).max(0.0) / self.objective.abs().max(1.0)
    }
}

/// Parses a solution file against `model`. Unknown names are skipped and
/// variables missing from the file default to zero, both with a warning.
pub fn parse_solution(text: &str, model: &MixedIntegerModel) -> Result<SolutionVector, SolveError> {
    let mut status = None;
    let mut objective = None;
    let mut values = vec![0.0; model.num_vars()];
    let mut seen = vec![false; model.num_vars()];
    let emitted: std::collections::HashMap<String, usize> = crate::mps::mps_names(model)
        .columns
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n, i))
        .collect();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("status:") {
                let word = rest.trim();
                status = Some(SolveStatus::parse(word).ok_or_else(|| SolveError::MalformedSolution {
                    line: line_no,
                    message: format!("unknown status `{word}`"),
                })?);
            } else if let Some(rest) = comment.strip_prefix("objective:") {
                let v: f64 = rest.trim().parse().map_err(|_| SolveError::MalformedSolution {
                    line: line_no,
                    message: format!("bad objective `{}`", rest.trim()),
                })?;
                objective = Some(v);
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SolveError::MalformedSolution {
                line: line_no,
                message: format!("expected `name value`, found `{line}`"),
            });
        };
        let v: f64 = val.parse().map_err(|_| SolveError::MalformedSolution {
            line: line_no,
            message: format!("bad value `{val}` for `{name}`"),
        })?;
        if !v.is_finite() {
            return Err(SolveError::NonFinite(name.to_string()));
        }
        match model.var_id(name).map(|id| id.0).or_else(|| emitted.get(name).copied()) {
            Some(id) => {
                values[id] = v;
                seen[id] = true;
            }
            None => warn!("solution line {line_no}: unknown variable `{name}` skipped"),
        }
    }
    let missing = seen.iter().filter(|s| !**s).count();
    let status = status.unwrap_or(if missing == model.num_vars() && model.num_vars() > 0 {
        SolveStatus::Infeasible
    } else {
        SolveStatus::Feasible
    });
    if status.has_solution() && missing > 0 {
        warn!("solution omits {missing} variables; treating them as zero");
    }
    let objective = objective.unwrap_or_else(|| model.evaluate_objective(&values));
    Ok(SolutionVector {
        status,
        values,
        objective,
        bound: f64::NEG_INFINITY,
    })
}

/// Writes a solution in the format read by [`parse_solution`].
pub fn write_solution(sol: &SolutionVector, model: &MixedIntegerModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# status: {}", sol.status.as_str());
    if sol.status.has_solution() {
        let _ = writeln!(out, "# objective: {}", sol.objective);
        for (v, x) in model.vars().iter().zip(&sol.values) {
            let _ = writeln!(out, "{} {}", v.name, x);
        }
    }
    out
}
