//! Solver-agnostic sparse representation of a mixed-integer linear program.
//!
//! The objective is always minimized. Variables and rows are addressed by
//! dense indices ([`VarId`], [`RowId`]) and carry unique names so a model can
//! be written to MPS and matched back against a solution file.

use std::collections::HashMap;
use std::fmt;

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates the row (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Linear expression `sum(coef * var) + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        LinExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        LinExpr {
            terms: vec![(v, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        self.terms.push((v, coef));
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms
            .extend(other.terms.iter().map(|&(v, a)| (v, a * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        LinExpr {
            terms: self.terms.iter().map(|&(v, a)| (v, a * scale)).collect(),
            constant: self.constant * scale,
        }
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, a)| a * values[v.0]).sum::<f64>()
    }

    /// Sums duplicate variables (keeping first-occurrence order) and drops zeros.
    pub fn merged(&self) -> LinExpr {
        LinExpr {
            terms: merge_terms(&self.terms),
            constant: self.constant,
        }
    }
}

pub(crate) fn merge_terms(terms: &[(VarId, f64)]) -> Vec<(VarId, f64)> {
    let mut slot: HashMap<VarId, usize> = HashMap::with_capacity(terms.len());
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for &(v, a) in terms {
        match slot.get(&v) {
            Some(&i) => out[i].1 += a,
            None => {
                slot.insert(v, out.len());
                out.push((v, a));
            }
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MixedIntegerModel {
    name: String,
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
    objective: Vec<f64>,
    objective_constant: f64,
    var_index: HashMap<String, VarId>,
    row_index: HashMap<String, RowId>,
}

impl MixedIntegerModel {
    pub fn new(name: impl Into<String>) -> Self {
        MixedIntegerModel {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        if self.var_index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let id = VarId(self.vars.len());
        self.var_index.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.objective.push(0.0);
        Ok(id)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    /// Adds `expr (sense) rhs`; the expression constant is moved to the right-hand side.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        expr: &LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId, ModelError> {
        let name = name.into();
        if self.row_index.contains_key(&name) {
            return Err(ModelError::DuplicateRow(name));
        }
        for &(v, a) in &expr.terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable {
                    row: name,
                    index: v.0,
                });
            }
            if !a.is_finite() {
                return Err(ModelError::NonFinite(format!("coefficient in row {name}")));
            }
        }
        let rhs = rhs - expr.constant;
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite(format!("rhs of row {name}")));
        }
        let id = RowId(self.rows.len());
        self.row_index.insert(name.clone(), id);
        self.rows.push(Constraint {
            name,
            terms: merge_terms(&expr.terms),
            sense,
            rhs,
        });
        Ok(id)
    }

    /// Adds `coef * v` to an existing row.
    pub fn add_row_term(&mut self, r: RowId, v: VarId, coef: f64) -> Result<(), ModelError> {
        let name = &self.rows[r.0].name;
        if v.0 >= self.vars.len() {
            return Err(ModelError::UnknownVariable {
                row: name.clone(),
                index: v.0,
            });
        }
        if !coef.is_finite() {
            return Err(ModelError::NonFinite(format!("coefficient in row {name}")));
        }
        let row = &mut self.rows[r.0];
        row.terms.push((v, coef));
        row.terms = merge_terms(&row.terms);
        Ok(())
    }

    pub fn set_objective_coef(&mut self, v: VarId, coef: f64) {
        self.objective[v.0] = coef;
    }

    pub fn add_objective_coef(&mut self, v: VarId, coef: f64) {
        self.objective[v.0] += coef;
    }

    /// Adds `scale * expr` to the objective.
    pub fn add_objective(&mut self, expr: &LinExpr, scale: f64) {
        for &(v, a) in &expr.terms {
            self.objective[v.0] += a * scale;
        }
        self.objective_constant += expr.constant * scale;
    }

    pub fn set_objective_constant(&mut self, c: f64) {
        self.objective_constant = c;
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn row(&self, r: RowId) -> &Constraint {
        &self.rows[r.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn row_id(&self, name: &str) -> Option<RowId> {
        self.row_index.get(name).copied()
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvalidBounds {
                name: self.vars[v.0].name.clone(),
                lower,
                upper,
            });
        }
        self.vars[v.0].lower = lower;
        self.vars[v.0].upper = upper;
        Ok(())
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries().count()
    }

    /// Binaries whose bounds still admit both values.
    pub fn num_free_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary && v.lower < v.upper)
            .count()
    }

    /// Removes the rows in `drop` (by index), renumbering the rest in order.
    pub fn without_rows(&self, drop: &[RowId]) -> MixedIntegerModel {
        let mut skip = vec![false; self.rows.len()];
        for r in drop {
            skip[r.0] = true;
        }
        let mut out = MixedIntegerModel {
            name: self.name.clone(),
            vars: self.vars.clone(),
            rows: Vec::with_capacity(self.rows.len()),
            objective: self.objective.clone(),
            objective_constant: self.objective_constant,
            var_index: self.var_index.clone(),
            row_index: HashMap::with_capacity(self.rows.len()),
        };
        for (i, row) in self.rows.iter().enumerate() {
            if !skip[i] {
                out.row_index.insert(row.name.clone(), RowId(out.rows.len()));
                out.rows.push(row.clone());
            }
        }
        out
    }

    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .zip(values)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    /// Largest row violation, each row scaled by its largest absolute coefficient.
    pub fn max_row_violation(&self, values: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let scale = r
                    .terms
                    .iter()
                    .map(|(_, a)| a.abs())
                    .fold(1.0_f64, f64::max);
                r.violation(values) / scale
            })
            .fold(0.0, f64::max)
    }

    pub fn max_bound_violation(&self, values: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn max_integrality_violation(&self, values: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(values)
            .filter(|(v, _)| v.kind == VarKind::Binary)
            .map(|(_, &x)| (x - x.round()).abs())
            .fold(0.0, f64::max)
    }

    /// True when `values` satisfies bounds, rows and integrality within `tol`.
    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        values.len() == self.vars.len()
            && self.max_bound_violation(values) <= tol
            && self.max_row_violation(values) <= tol
            && self.max_integrality_violation(values) <= tol
    }

    /// Checks the structural invariants (bounds, binary domains, name maps).
    pub fn check(&self) -> Result<(), ModelError> {
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::InvalidBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::InvalidBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for r in &self.rows {
            for &(v, _) in &r.terms {
                if v.0 >= self.vars.len() {
                    return Err(ModelError::UnknownVariable {
                        row: r.name.clone(),
                        index: v.0,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_are_rejected() {
        let mut m = MixedIntegerModel::new("t");
        m.add_continuous("x", 0.0, 1.0).unwrap();
        assert!(matches!(
            m.add_continuous("x", 0.0, 1.0),
            Err(ModelError::DuplicateVariable(_))
        ));
    }

    #[test]
    fn row_constant_moves_to_rhs_and_terms_merge() {
        let mut m = MixedIntegerModel::new("t");
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        let mut e = LinExpr::var(x);
        e.add_term(x, 2.0).add_constant(4.0);
        let r = m.add_row("r", &e, Sense::Le, 10.0).unwrap();
        assert_eq!(m.row(r).terms, vec![(x, 3.0)]);
        assert_eq!(m.row(r).rhs, 6.0);
    }

    #[test]
    fn binary_bounds_are_clamped() {
        let mut m = MixedIntegerModel::new("t");
        let b = m.add_var("b", VarKind::Binary, -3.0, 7.0).unwrap();
        assert_eq!((m.var(b).lower, m.var(b).upper), (0.0, 1.0));
        assert!(m.check().is_ok());
    }

    #[test]
    fn unknown_variable_in_row() {
        let mut m = MixedIntegerModel::new("t");
        let e = LinExpr::var(VarId(3));
        assert!(matches!(
            m.add_row("r", &e, Sense::Eq, 0.0),
            Err(ModelError::UnknownVariable { .. })
        ));
    }
}
