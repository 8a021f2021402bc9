//! Depth-first branch and bound over binary variables.

use std::time::Instant;

use log::debug;

use crate::error::SolveError;
use crate::model::MixedIntegerModel;
use crate::simplex::{DenseSimplex, LpOptions, LpStatus};
use crate::solution::{SolutionVector, SolveOptions, SolveStatus};

/// One processed node: its parent's LP bound and its own LP bound
/// (`None` when the node LP was infeasible).
#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub depth: usize,
    pub parent_bound: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SearchTrace {
    pub nodes: Vec<NodeRecord>,
}

struct Node {
    fixes: Vec<(usize, f64)>,
    parent_bound: f64,
}

/// Solves `model` exactly (up to `relative_gap_tol`).
pub fn reference_solve(
    model: &MixedIntegerModel,
    options: &SolveOptions,
) -> Result<SolutionVector, SolveError> {
    reference_solve_traced(model, options, None)
}

pub fn reference_solve_traced(
    model: &MixedIntegerModel,
    options: &SolveOptions,
    mut trace: Option<&mut SearchTrace>,
) -> Result<SolutionVector, SolveError> {
    model.check()?;
    let free = model.num_free_binaries();
    if free > options.max_binaries {
        return Err(SolveError::TooLarge {
            found: free,
            limit: options.max_binaries,
        });
    }
    let start = Instant::now();
    let n = model.num_vars();
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let base: Vec<(f64, f64)> = model.vars().iter().map(|v| (v.lower, v.upper)).collect();
    let mut lp = DenseSimplex::new(model, LpOptions::default());
    let int_tol = 1e-6;

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut open_bound_floor = f64::INFINITY;
    let mut stack = vec![Node {
        fixes: Vec::new(),
        parent_bound: f64::NEG_INFINITY,
    }];
    let mut unbounded = false;
    let mut hit_limit = false;
    let mut nodes = 0usize;

    let prune_at = |inc: &Option<(Vec<f64>, f64)>| -> f64 {
        match inc {
            Some((_, z)) => z - options.relative_gap_tol * z.abs().max(1e-9) - 1e-9,
            None => f64::INFINITY,
        }
    };

    while let Some(node) = stack.pop() {
        if let Some(limit) = options.time_limit {
            if start.elapsed() >= limit {
                open_bound_floor = open_bound_floor.min(node.parent_bound);
                for rest in &stack {
                    open_bound_floor = open_bound_floor.min(rest.parent_bound);
                }
                hit_limit = true;
                break;
            }
        }
        if node.parent_bound >= prune_at(&incumbent) {
            open_bound_floor = open_bound_floor.min(node.parent_bound);
            continue;
        }
        nodes += 1;
        for &j in &binaries {
            lp.set_bounds(j, base[j].0, base[j].1);
        }
        for &(j, v) in &node.fixes {
            lp.set_bounds(j, v, v);
        }
        let status = lp.solve();
        let depth = node.fixes.len();
        match status {
            LpStatus::Infeasible => {
                if let Some(t) = trace.as_deref_mut() {
                    t.nodes.push(NodeRecord {
                        depth,
                        parent_bound: node.parent_bound,
                        bound: None,
                    });
                }
                continue;
            }
            LpStatus::Unbounded => {
                unbounded = true;
                break;
            }
            LpStatus::IterationLimit => {
                // treat as unresolved: keep its parent's bound as an open floor
                open_bound_floor = open_bound_floor.min(node.parent_bound);
                hit_limit = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        let z = lp.objective().max(node.parent_bound);
        if let Some(t) = trace.as_deref_mut() {
            t.nodes.push(NodeRecord {
                depth,
                parent_bound: node.parent_bound,
                bound: Some(z),
            });
        }
        if z >= prune_at(&incumbent) {
            open_bound_floor = open_bound_floor.min(z);
            continue;
        }
        let x = lp.values();
        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = int_tol;
        for &j in &binaries {
            let f = (x[j] - x[j].round()).abs();
            let better = match branch {
                None => f > best_frac,
                Some((bj, _)) => {
                    f > best_frac + 1e-12
                        || ((f - best_frac).abs() <= 1e-12 && model.vars()[j].name < model.vars()[bj].name)
                }
            };
            if better {
                best_frac = f.max(best_frac);
                branch = Some((j, x[j]));
            }
        }
        match branch {
            None => {
                if let Some((vals, obj)) = polish(model, &x, &binaries, options) {
                    debug!("incumbent {obj} at node {nodes}");
                    if incumbent.as_ref().is_none_or(|(_, z)| obj < *z) {
                        incumbent = Some((vals, obj));
                    }
                }
            }
            Some((j, xj)) => {
                let near = if xj >= 0.5 { 1.0 } else { 0.0 };
                let far = 1.0 - near;
                let mut f_far = node.fixes.clone();
                f_far.push((j, far));
                let mut f_near = node.fixes;
                f_near.push((j, near));
                stack.push(Node {
                    fixes: f_far,
                    parent_bound: z,
                });
                stack.push(Node {
                    fixes: f_near,
                    parent_bound: z,
                });
            }
        }
    }
    debug!("branch and bound: {nodes} nodes, {} LP iterations", lp.iterations());

    if unbounded {
        return Ok(SolutionVector::empty(SolveStatus::Unbounded, n));
    }
    match incumbent {
        Some((values, objective)) => {
            let bound = open_bound_floor.min(objective);
            let status = if hit_limit
                && (objective - bound) > options.relative_gap_tol * objective.abs().max(1e-9) + 1e-9
            {
                SolveStatus::Feasible
            } else {
                SolveStatus::Optimal
            };
            Ok(SolutionVector {
                status,
                values,
                objective,
                bound,
            })
        }
        None => {
            let status = if hit_limit {
                SolveStatus::Limit
            } else {
                SolveStatus::Infeasible
            };
            Ok(SolutionVector::empty(status, n))
        }
    }
}

/// Rounds binaries exactly, re-solves the continuous part and verifies feasibility.
fn polish(
    model: &MixedIntegerModel,
    x: &[f64],
    binaries: &[usize],
    options: &SolveOptions,
) -> Option<(Vec<f64>, f64)> {
    let mut fixed = model.clone();
    for &j in binaries {
        let v = x[j].round().clamp(0.0, 1.0);
        fixed.set_bounds(crate::model::VarId(j), v, v).ok()?;
    }
    let mut lp = DenseSimplex::new(&fixed, LpOptions::default());
    let mut vals = if lp.solve() == LpStatus::Optimal {
        lp.values()
    } else {
        x.to_vec()
    };
    for &j in binaries {
        vals[j] = x[j].round().clamp(0.0, 1.0);
    }
    for (v, var) in vals.iter_mut().zip(model.vars()) {
        *v = v.clamp(var.lower, var.upper);
    }
    if !model.is_feasible(&vals, options.feasibility_tol) {
        return None;
    }
    let obj = model.evaluate_objective(&vals);
    Some((vals, obj))
}
