//! Yearly investment layer: capacity accumulation, amortized capital cost,
//! discount weights and the emissions, RPS, ELCC and PRM rows.

use decarb_milp::{LinExpr, MixedIntegerModel, ModelError, RowId, Sense, VarId, VarKind};

use crate::scenario::{ByYear, ElccSurface, PolicySchedules};

/// Discounted number of real years represented by modeled year `years[i]`.
///
/// Interior years span to the next modeled year. The last modeled year
/// covers every real year through `horizon_end_year` inclusive, each
/// discounted individually.
pub fn yearly_weight(i: usize, policy: &PolicySchedules, years: &[i32]) -> f64 {
    let base = policy.base_year.unwrap_or(years[0]);
    let df = 1.0 / (1.0 + policy.discount_rate);
    let y = years[i];
    match years.get(i + 1) {
        Some(&next) => df.powi(y - base) * f64::from(next - y),
        None => (y..=policy.horizon_end_year.max(y)).map(|t| df.powi(t - base)).sum(),
    }
}

pub fn yearly_weights(policy: &PolicySchedules, years: &[i32]) -> Vec<f64> {
    (0..years.len()).map(|i| yearly_weight(i, policy, years)).collect()
}

/// Capital recovery factor: level annual payment per unit of capital.
pub fn capital_recovery_factor(rate: f64, life: u32) -> f64 {
    let n = f64::from(life.max(1));
    if rate == 0.0 {
        1.0 / n
    } else {
        rate / (1.0 - (1.0 + rate).powf(-n))
    }
}

pub fn annuity(cost: f64, rate: f64, life: u32) -> f64 {
    cost * capital_recovery_factor(rate, life)
}

/// Indices of modeled years that pay the annuity of a build in `years[build]`.
pub fn payment_years(build: usize, life: u32, years: &[i32]) -> impl Iterator<Item = usize> + '_ {
    let start = years[build];
    let end = start + life as i32;
    (build..years.len()).filter(move |&j| years[j] < end)
}

/// Per-year status of one thermal unit.
#[derive(Debug, Clone)]
pub struct ThermalPlan {
    pub iu: Vec<VarId>,
    pub build: Vec<Option<VarId>>,
    pub retire: Vec<Option<VarId>>,
}

impl ThermalPlan {
    pub fn all(&self) -> impl Iterator<Item = VarId> + '_ {
        self.iu
            .iter()
            .copied()
            .chain(self.build.iter().flatten().copied())
            .chain(self.retire.iter().flatten().copied())
    }
}

/// Per-year installed capacity of a continuous resource.
#[derive(Debug, Clone)]
pub struct CapacityPlan {
    pub ic: Vec<VarId>,
    pub build: Vec<Option<VarId>>,
    pub retire: Vec<Option<VarId>>,
}

impl CapacityPlan {
    pub fn expr(&self, y: usize) -> LinExpr {
        LinExpr::var(self.ic[y])
    }
}

/// Operational status accumulation for a thermal unit. Units that can be
/// neither built nor retired have their status fixed to the plan.
pub fn build_thermal_linking(
    model: &mut MixedIntegerModel,
    id: &str,
    planned: &ByYear<f64>,
    buildable: bool,
    retirable: bool,
    years: &[i32],
) -> Result<(ThermalPlan, Vec<RowId>), ModelError> {
    let mut plan = ThermalPlan {
        iu: Vec::new(),
        build: Vec::new(),
        retire: Vec::new(),
    };
    let mut rows = Vec::new();
    for &y in years {
        let p = planned.at(y);
        let (lo, hi) = if buildable || retirable { (0.0, 1.0) } else { (p, p) };
        plan.iu.push(model.add_continuous(format!("iu[{id},{y}]"), lo, hi)?);
        plan.build.push(if buildable {
            Some(model.add_var(format!("iub[{id},{y}]"), VarKind::Binary, 0.0, 1.0)?)
        } else {
            None
        });
        plan.retire.push(if retirable {
            Some(model.add_var(format!("iur[{id},{y}]"), VarKind::Binary, 0.0, 1.0)?)
        } else {
            None
        });
    }
    if buildable || retirable {
        for (j, &y) in years.iter().enumerate() {
            let mut e = LinExpr::term(plan.iu[j], 1.0);
            for k in 0..=j {
                if let Some(b) = plan.build[k] {
                    e.add_term(b, -1.0);
                }
                if let Some(r) = plan.retire[k] {
                    e.add_term(r, 1.0);
                }
            }
            rows.push(model.add_row(format!("iu_acc[{id},{y}]"), &e, Sense::Eq, planned.at(y))?);
        }
        for (tag, vars) in [("iub_once", &plan.build), ("iur_once", &plan.retire)] {
            let mut e = LinExpr::new();
            for v in vars.iter().flatten() {
                e.add_term(*v, 1.0);
            }
            if !e.terms.is_empty() {
                rows.push(model.add_row(format!("{tag}[{id}]"), &e, Sense::Le, 1.0)?);
            }
        }
    }
    Ok((plan, rows))
}

/// Capacity accumulation `IC(y) = planned(y) + Σ_{y' ≤ y} (build − retire)`
/// with cumulative builds capped at `buildable_limit`.
pub fn build_capacity_linking(
    model: &mut MixedIntegerModel,
    tag: &str,
    id: &str,
    planned: &ByYear<f64>,
    buildable_limit: f64,
    retirable: bool,
    years: &[i32],
) -> Result<(CapacityPlan, Vec<RowId>), ModelError> {
    let buildable = buildable_limit > 0.0;
    let mut plan = CapacityPlan {
        ic: Vec::new(),
        build: Vec::new(),
        retire: Vec::new(),
    };
    let mut rows = Vec::new();
    for &y in years {
        let p = planned.at(y);
        let (lo, hi) = if buildable || retirable { (0.0, f64::INFINITY) } else { (p, p) };
        plan.ic.push(model.add_continuous(format!("{tag}[{id},{y}]"), lo, hi)?);
        plan.build.push(if buildable {
            Some(model.add_continuous(format!("{tag}_b[{id},{y}]"), 0.0, buildable_limit)?)
        } else {
            None
        });
        plan.retire.push(if retirable {
            Some(model.add_continuous(format!("{tag}_r[{id},{y}]"), 0.0, f64::INFINITY)?)
        } else {
            None
        });
    }
    if buildable || retirable {
        for (j, &y) in years.iter().enumerate() {
            let mut e = LinExpr::term(plan.ic[j], 1.0);
            for k in 0..=j {
                if let Some(b) = plan.build[k] {
                    e.add_term(b, -1.0);
                }
                if let Some(r) = plan.retire[k] {
                    e.add_term(r, 1.0);
                }
            }
            rows.push(model.add_row(format!("{tag}_acc[{id},{y}]"), &e, Sense::Eq, planned.at(y))?);
        }
        if buildable {
            let mut e = LinExpr::new();
            for b in plan.build.iter().flatten() {
                e.add_term(*b, 1.0);
            }
            rows.push(model.add_row(format!("{tag}_limit[{id}]"), &e, Sense::Le, buildable_limit)?);
        }
    }
    Ok((plan, rows))
}

/// Adds the amortized payments of build variables to per-year investment
/// expressions. `cost(y)` is the capital cost of a build in `years[y]`.
pub fn add_amortized_builds(
    investment: &mut [LinExpr],
    builds: &[Option<VarId>],
    cost: impl Fn(i32) -> f64,
    rate: f64,
    life: u32,
    years: &[i32],
) {
    for (j, b) in builds.iter().enumerate() {
        let Some(b) = b else { continue };
        let a = annuity(cost(years[j]), rate, life);
        if a == 0.0 {
            continue;
        }
        for k in payment_years(j, life, years) {
            investment[k].add_term(*b, a);
        }
    }
}

/// `emissions ≤ cap`, where `emissions` is already week-weighted.
pub fn build_emissions_constraint(
    model: &mut MixedIntegerModel,
    year: i32,
    emissions: &LinExpr,
    cap: f64,
) -> Result<RowId, ModelError> {
    model.add_row(format!("emissions[{year}]"), emissions, Sense::Le, cap)
}

/// Weighted eligible generation ≥ fraction × weighted policy-zone load.
pub fn build_rps_constraint(
    model: &mut MixedIntegerModel,
    year: i32,
    eligible_generation: &LinExpr,
    weighted_load: f64,
    fraction: f64,
) -> Result<RowId, ModelError> {
    model.add_row(format!("rps[{year}]"), eligible_generation, Sense::Ge, fraction * weighted_load)
}

/// Capacity terms feeding the reliability rows of one year.
pub struct ReliabilityInputs {
    /// Σ multiplier · IC over wind resources.
    pub wind_axis: LinExpr,
    pub solar_axis: LinExpr,
    /// Per storage resource: (power IC, energy ICE, multiplier).
    pub storage: Vec<(String, LinExpr, LinExpr, f64)>,
    /// Thermal firm capacity Σ IU · P̄ · NQC plus hydro P̄ · NQC.
    pub firm: LinExpr,
}

#[derive(Debug, Clone)]
pub struct ReliabilityVars {
    pub elcc: VarId,
    pub elcc_storage: VarId,
    pub four_hour: Vec<VarId>,
    pub prm_row: RowId,
}

/// ELCC facet envelopes for wind/solar and storage plus the PRM row.
pub fn build_elcc_and_prm(
    model: &mut MixedIntegerModel,
    year: i32,
    surface: &ElccSurface,
    inputs: &ReliabilityInputs,
    requirement: f64,
) -> Result<(ReliabilityVars, Vec<RowId>), ModelError> {
    let facets = surface.facets.get(year).cloned().unwrap_or_default();
    let sfacets = surface.storage_facets.get(year).cloned().unwrap_or_default();
    let mut rows = Vec::new();
    let elcc = model.add_continuous(format!("elcc[{year}]"), f64::NEG_INFINITY, f64::INFINITY)?;
    let elcc_s = model.add_continuous(format!("elcc_s[{year}]"), f64::NEG_INFINITY, f64::INFINITY)?;
    for (f, fa) in facets.iter().enumerate() {
        let mut e = LinExpr::term(elcc, 1.0);
        e.add_expr(&inputs.wind_axis, -fa.slope_wind);
        e.add_expr(&inputs.solar_axis, -fa.slope_solar);
        rows.push(model.add_row(format!("elcc_facet[{year},{f}]"), &e, Sense::Le, fa.intercept)?);
    }
    let mut four_hour = Vec::new();
    let mut axis = LinExpr::new();
    for (id, power, energy, mult) in &inputs.storage {
        let m = model.add_continuous(format!("m4h[{id},{year}]"), 0.0, f64::INFINITY)?;
        let mut e = LinExpr::term(m, 1.0);
        e.add_expr(power, -1.0);
        rows.push(model.add_row(format!("m4h_p[{id},{year}]"), &e, Sense::Le, 0.0)?);
        let mut e = LinExpr::term(m, 1.0);
        e.add_expr(energy, -1.0 / surface.four_hour_divisor);
        rows.push(model.add_row(format!("m4h_e[{id},{year}]"), &e, Sense::Le, 0.0)?);
        axis.add_term(m, *mult);
        four_hour.push(m);
    }
    for (f, fa) in sfacets.iter().enumerate() {
        let mut e = LinExpr::term(elcc_s, 1.0);
        e.add_expr(&axis, -fa.slope);
        rows.push(model.add_row(format!("elcc_s_facet[{year},{f}]"), &e, Sense::Le, fa.intercept)?);
    }
    let mut e = inputs.firm.clone();
    e.add_term(elcc, 1.0).add_term(elcc_s, 1.0);
    let prm_row = model.add_row(format!("prm[{year}]"), &e, Sense::Ge, requirement)?;
    rows.push(prm_row);
    Ok((
        ReliabilityVars {
            elcc,
            elcc_storage: elcc_s,
            four_hour,
            prm_row,
        },
        rows,
    ))
}
