//! Single-week unit commitment blocks on a circular hourly grid.
//!
//! Each builder declares or constrains the variables of one resource for
//! one (year, week) block. Inter-hour links always wrap from the last hour
//! back to hour 0.

use decarb_milp::{LinExpr, MixedIntegerModel, ModelError, RowId, Sense, VarId};
use thiserror::Error;

use crate::scenario::{HydroResource, Line, RenewableResource, StorageResource, ThermalUnit, Zone};
use crate::series::Series;
use crate::time::wrap;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("`{unit}`: {what} of {hours} h does not fit a {period}-hour circular week")]
    Degenerate {
        unit: String,
        what: &'static str,
        hours: usize,
        period: usize,
    },
    #[error("data gap: {series} of `{resource}` has no value for year {year}, week {week}, hour {hour}")]
    DataGap {
        resource: String,
        series: &'static str,
        year: i32,
        week: u32,
        hour: usize,
    },
    #[error("line `{line}` references unknown zone `{zone}`")]
    UnknownZone { line: String, zone: String },
    #[error("`{resource}`: {message}")]
    Config { resource: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One (year, week) slice of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub year: i32,
    pub week: u32,
    pub hours: usize,
}

impl Block {
    pub fn prev(&self, t: usize) -> usize {
        wrap(t as i64 - 1, self.hours)
    }

    pub fn next(&self, t: usize) -> usize {
        wrap(t as i64 + 1, self.hours)
    }

    pub fn name(&self, kind: &str, id: &str, t: usize) -> String {
        format!("{kind}[{id},{},{},{t}]", self.year, self.week)
    }
}

/// Hourly values of `series` for `block`.
pub fn hourly(
    series: &Series,
    resource: &str,
    what: &'static str,
    block: &Block,
) -> Result<Vec<f64>, BuildError> {
    (0..block.hours)
        .map(|t| {
            series.get(block.year, block.week, t).ok_or(BuildError::DataGap {
                resource: resource.to_string(),
                series: what,
                year: block.year,
                week: block.week,
                hour: t,
            })
        })
        .collect()
}

fn row(
    model: &mut MixedIntegerModel,
    rows: &mut Vec<RowId>,
    name: String,
    expr: LinExpr,
    sense: Sense,
) -> Result<(), ModelError> {
    rows.push(model.add_row(name, &expr, sense, 0.0)?);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ThermalVars {
    pub v: Vec<VarId>,
    pub s: Vec<VarId>,
    pub d: Vec<VarId>,
    pub p: Vec<VarId>,
    /// Available headroom, between p and P̄·v.
    pub h: Vec<VarId>,
}

impl ThermalVars {
    pub fn all(&self) -> impl Iterator<Item = VarId> + '_ {
        self.v
            .iter()
            .chain(&self.s)
            .chain(&self.d)
            .chain(&self.p)
            .chain(&self.h)
            .copied()
    }
}

/// Declares commitment, start, stop, output and headroom variables.
/// `available = false` pins commitment to zero.
pub fn declare_thermal(
    model: &mut MixedIntegerModel,
    unit: &ThermalUnit,
    block: &Block,
    available: bool,
) -> Result<ThermalVars, ModelError> {
    let n = block.hours;
    let mut vars = ThermalVars {
        v: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        p: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
    };
    let vu = if available { 1.0 } else { 0.0 };
    for t in 0..n {
        vars.v.push(model.add_var(block.name("v", &unit.id, t), decarb_milp::VarKind::Binary, 0.0, vu)?);
    }
    for t in 0..n {
        vars.s.push(model.add_continuous(block.name("su", &unit.id, t), 0.0, 1.0)?);
        vars.d.push(model.add_continuous(block.name("sd", &unit.id, t), 0.0, 1.0)?);
        vars.p.push(model.add_continuous(block.name("p", &unit.id, t), 0.0, unit.p_max * vu)?);
        vars.h.push(model.add_continuous(block.name("hr", &unit.id, t), 0.0, unit.p_max * vu)?);
    }
    Ok(vars)
}

/// Output limits, start/stop linking, circular minimum up/down time and
/// the three ramp families.
pub fn build_thermal_constraints(
    model: &mut MixedIntegerModel,
    unit: &ThermalUnit,
    x: &ThermalVars,
    block: &Block,
) -> Result<Vec<RowId>, BuildError> {
    let n = block.hours;
    for (what, hours) in [("minimum uptime", unit.min_uptime), ("minimum downtime", unit.min_downtime)] {
        if hours > n || hours == 0 {
            return Err(BuildError::Degenerate {
                unit: unit.id.clone(),
                what,
                hours,
                period: n,
            });
        }
    }
    let pmax = unit.p_max;
    let su = unit.startup_limit.min(pmax);
    let sd = unit.shutdown_limit.min(pmax);
    let id = &unit.id;
    let mut rows = Vec::new();
    for t in 0..n {
        let tp = block.prev(t);
        let tn = block.next(t);
        let (v, vp, vn) = (x.v[t], x.v[tp], x.v[tn]);
        let (p, pp) = (x.p[t], x.p[tp]);

        let mut e = LinExpr::term(p, 1.0);
        e.add_term(v, -unit.p_min);
        row(model, &mut rows, block.name("pmin", id, t), e, Sense::Ge)?;
        let mut e = LinExpr::term(p, 1.0);
        e.add_term(x.h[t], -1.0);
        row(model, &mut rows, block.name("phead", id, t), e, Sense::Le)?;
        let mut e = LinExpr::term(x.h[t], 1.0);
        e.add_term(v, -pmax);
        row(model, &mut rows, block.name("pmax", id, t), e, Sense::Le)?;

        let mut e = LinExpr::term(x.s[t], 1.0);
        e.add_term(v, -1.0).add_term(vp, 1.0);
        row(model, &mut rows, block.name("start", id, t), e, Sense::Ge)?;
        let mut e = LinExpr::term(x.d[t], 1.0);
        e.add_term(vp, -1.0).add_term(v, 1.0);
        row(model, &mut rows, block.name("stop", id, t), e, Sense::Ge)?;

        if unit.min_uptime > 1 {
            let ut = unit.min_uptime as f64;
            let mut e = LinExpr::new();
            for k in 0..unit.min_uptime {
                e.add_term(x.v[wrap((t + k) as i64, n)], 1.0);
            }
            e.add_term(v, -ut).add_term(vp, ut);
            row(model, &mut rows, block.name("uptime", id, t), e, Sense::Ge)?;
        }
        if unit.min_downtime > 1 {
            let dt = unit.min_downtime as f64;
            let mut e = LinExpr::constant(dt);
            for k in 0..unit.min_downtime {
                e.add_term(x.v[wrap((t + k) as i64, n)], -1.0);
            }
            e.add_term(vp, -dt).add_term(v, dt);
            row(model, &mut rows, block.name("downtime", id, t), e, Sense::Ge)?;
        }

        // p(t) <= p(t-1) + RU v(t-1) + SU [v(t) - v(t-1)] + P̄ [1 - v(t)]
        let mut e = LinExpr::constant(-pmax);
        e.add_term(p, 1.0)
            .add_term(pp, -1.0)
            .add_term(vp, -unit.ramp_up + su)
            .add_term(v, -su + pmax);
        row(model, &mut rows, block.name("rampup", id, t), e, Sense::Le)?;
        // p(t) <= P̄ v(t+1) + SD [v(t) - v(t+1)]
        let mut e = LinExpr::term(p, 1.0);
        e.add_term(vn, -pmax + sd).add_term(v, -sd);
        row(model, &mut rows, block.name("sdramp", id, t), e, Sense::Le)?;
        // p(t) >= p(t-1) - RD v(t) - SD [v(t-1) - v(t)] - P̄ [1 - v(t-1)]
        let mut e = LinExpr::constant(pmax);
        e.add_term(p, 1.0)
            .add_term(pp, -1.0)
            .add_term(v, unit.ramp_down - sd)
            .add_term(vp, sd - pmax);
        row(model, &mut rows, block.name("rampdown", id, t), e, Sense::Ge)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct RenewableVars {
    pub p: Vec<VarId>,
    /// Absent for firm resources.
    pub curt: Option<Vec<VarId>>,
}

pub fn declare_renewable(
    model: &mut MixedIntegerModel,
    r: &RenewableResource,
    block: &Block,
) -> Result<RenewableVars, ModelError> {
    let mut p = Vec::with_capacity(block.hours);
    let mut curt = Vec::with_capacity(block.hours);
    for t in 0..block.hours {
        p.push(model.add_continuous(block.name("p", &r.id, t), 0.0, f64::INFINITY)?);
        if !r.is_firm {
            curt.push(model.add_continuous(block.name("curt", &r.id, t), 0.0, f64::INFINITY)?);
        }
    }
    Ok(RenewableVars {
        p,
        curt: (!r.is_firm).then_some(curt),
    })
}

/// `p + curt = PF · installed` each hour. Nonnegative output caps
/// curtailment at the available energy.
pub fn build_renewable_constraints(
    model: &mut MixedIntegerModel,
    r: &RenewableResource,
    x: &RenewableVars,
    installed: &LinExpr,
    block: &Block,
) -> Result<Vec<RowId>, BuildError> {
    let pf = hourly(&r.production_factor, &r.id, "production factor", block)?;
    let mut rows = Vec::new();
    for t in 0..block.hours {
        let mut e = LinExpr::term(x.p[t], 1.0);
        if let Some(c) = &x.curt {
            e.add_term(c[t], 1.0);
        }
        e.add_expr(installed, -pf[t]);
        row(model, &mut rows, block.name("ren", &r.id, t), e, Sense::Eq)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct HydroVars {
    pub p: Vec<VarId>,
}

pub fn declare_hydro(model: &mut MixedIntegerModel, h: &HydroResource, block: &Block) -> Result<HydroVars, ModelError> {
    let p = (0..block.hours)
        .map(|t| model.add_continuous(block.name("p", &h.id, t), h.p_min, h.p_max))
        .collect::<Result<_, _>>()?;
    Ok(HydroVars { p })
}

/// Weekly energy budget and circular ramp band; output bounds sit on the variables.
pub fn build_hydro_constraints(
    model: &mut MixedIntegerModel,
    h: &HydroResource,
    x: &HydroVars,
    block: &Block,
) -> Result<Vec<RowId>, BuildError> {
    let budget = h
        .weekly_energy_budget
        .get(block.year, block.week)
        .ok_or(BuildError::DataGap {
            resource: h.id.clone(),
            series: "weekly energy budget",
            year: block.year,
            week: block.week,
            hour: 0,
        })?;
    let mut rows = Vec::new();
    let mut e = LinExpr::constant(-budget);
    for &p in &x.p {
        e.add_term(p, 1.0);
    }
    row(model, &mut rows, block.name("budget", &h.id, 0), e, Sense::Le)?;
    for t in 0..block.hours {
        let tn = block.next(t);
        let mut e = LinExpr::term(x.p[tn], 1.0);
        e.add_term(x.p[t], -1.0).add_constant(-h.ramp_limit);
        row(model, &mut rows, block.name("hramp_up", &h.id, t), e.clone(), Sense::Le)?;
        let mut e = LinExpr::term(x.p[tn], 1.0);
        e.add_term(x.p[t], -1.0).add_constant(h.ramp_limit);
        row(model, &mut rows, block.name("hramp_dn", &h.id, t), e, Sense::Ge)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct StorageVars {
    pub pc: Vec<VarId>,
    pub pd: Vec<VarId>,
    pub soc: Vec<VarId>,
    /// Hourly mode: 1 discharge, 0 charge.
    pub mode: Vec<VarId>,
}

pub fn declare_storage(model: &mut MixedIntegerModel, s: &StorageResource, block: &Block) -> Result<StorageVars, ModelError> {
    let mut x = StorageVars {
        pc: Vec::new(),
        pd: Vec::new(),
        soc: Vec::new(),
        mode: Vec::new(),
    };
    for t in 0..block.hours {
        x.mode.push(model.add_binary(block.name("mode", &s.id, t))?);
    }
    for t in 0..block.hours {
        x.pc.push(model.add_continuous(block.name("pc", &s.id, t), 0.0, f64::INFINITY)?);
        x.pd.push(model.add_continuous(block.name("pd", &s.id, t), 0.0, f64::INFINITY)?);
        x.soc.push(model.add_continuous(block.name("soc", &s.id, t), 0.0, f64::INFINITY)?);
    }
    Ok(x)
}

/// Mode-exclusive charge and discharge limits, state-of-charge band and the
/// circular linear state-of-charge recursion. `big_m` must bound the largest
/// possible charge or discharge rate.
pub fn build_storage_constraints(
    model: &mut MixedIntegerModel,
    s: &StorageResource,
    x: &StorageVars,
    power: &LinExpr,
    energy: &LinExpr,
    big_m: f64,
    block: &Block,
) -> Result<Vec<RowId>, BuildError> {
    let mut rows = Vec::new();
    let id = &s.id;
    let m = big_m.max(1e-6);
    for t in 0..block.hours {
        let mut e = LinExpr::term(x.pc[t], 1.0);
        e.add_expr(power, -s.charge_rate_per_mw);
        row(model, &mut rows, block.name("pcmax", id, t), e, Sense::Le)?;
        let mut e = LinExpr::term(x.pc[t], 1.0);
        e.add_term(x.mode[t], m).add_constant(-m);
        row(model, &mut rows, block.name("pcmode", id, t), e, Sense::Le)?;
        let mut e = LinExpr::term(x.pd[t], 1.0);
        e.add_expr(power, -s.discharge_rate_per_mw);
        row(model, &mut rows, block.name("pdmax", id, t), e, Sense::Le)?;
        let mut e = LinExpr::term(x.pd[t], 1.0);
        e.add_term(x.mode[t], -m);
        row(model, &mut rows, block.name("pdmode", id, t), e, Sense::Le)?;

        let mut e = LinExpr::term(x.soc[t], 1.0);
        e.add_expr(energy, -s.soc_min_fraction);
        row(model, &mut rows, block.name("socmin", id, t), e, Sense::Ge)?;
        let mut e = LinExpr::term(x.soc[t], 1.0);
        e.add_expr(energy, -s.soc_max_fraction);
        row(model, &mut rows, block.name("socmax", id, t), e, Sense::Le)?;

        let mut e = LinExpr::term(x.soc[t], 1.0);
        e.add_term(x.soc[block.prev(t)], -(1.0 - s.self_discharge))
            .add_term(x.pc[t], -s.charge_efficiency)
            .add_term(x.pd[t], 1.0 / s.discharge_efficiency);
        row(model, &mut rows, block.name("soc", id, t), e, Sense::Eq)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct LineVars {
    /// Flow in the reference direction.
    pub fp: Vec<VarId>,
    /// Flow against the reference direction.
    pub fm: Vec<VarId>,
}

pub fn declare_line(model: &mut MixedIntegerModel, l: &Line, block: &Block) -> Result<LineVars, ModelError> {
    let mut x = LineVars { fp: Vec::new(), fm: Vec::new() };
    for t in 0..block.hours {
        x.fp.push(model.add_continuous(block.name("fp", &l.id, t), 0.0, l.flow_max)?);
        x.fm.push(model.add_continuous(block.name("fm", &l.id, t), 0.0, -l.flow_min)?);
    }
    Ok(x)
}

/// Returns residuals `R[z][t]` = injections + imports − load − exports.
/// `injections[z][t]` carries every resource term of zone `z`; flow limits
/// are the variable bounds of the split flows.
pub fn build_network_and_balance(
    zones: &[Zone],
    lines: &[Line],
    line_vars: &[LineVars],
    injections: &[Vec<LinExpr>],
    block: &Block,
) -> Result<Vec<Vec<LinExpr>>, BuildError> {
    let mut residual: Vec<Vec<LinExpr>> = injections.to_vec();
    for (zi, z) in zones.iter().enumerate() {
        let load = hourly(&z.load, &z.id, "load", block)?;
        for t in 0..block.hours {
            residual[zi][t].add_constant(-load[t]);
        }
    }
    for (l, x) in lines.iter().zip(line_vars) {
        let find = |id: &str| {
            zones.iter().position(|z| z.id == id).ok_or_else(|| BuildError::UnknownZone {
                line: l.id.clone(),
                zone: id.to_string(),
            })
        };
        let from = find(&l.from_zone)?;
        let to = find(&l.to_zone)?;
        for t in 0..block.hours {
            residual[to][t].add_term(x.fp[t], 1.0).add_term(x.fm[t], -1.0);
            residual[from][t].add_term(x.fp[t], -1.0).add_term(x.fm[t], 1.0);
        }
    }
    Ok(residual)
}

/// Reserve products held by one resource in one hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Product {
    FreqResponse,
    RegUp,
    RegDown,
    Spin,
    LoadFollowUp,
    LoadFollowDown,
}

impl Product {
    pub const ALL: [Product; 6] = [
        Product::FreqResponse,
        Product::RegUp,
        Product::RegDown,
        Product::Spin,
        Product::LoadFollowUp,
        Product::LoadFollowDown,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Product::FreqResponse => "fr",
            Product::RegUp => "regup",
            Product::RegDown => "regdn",
            Product::Spin => "spin",
            Product::LoadFollowUp => "lfup",
            Product::LoadFollowDown => "lfdn",
        }
    }

    pub fn is_up(self) -> bool {
        !matches!(self, Product::RegDown | Product::LoadFollowDown)
    }
}

/// `vars[product index][t]`; products a resource cannot hold are empty.
#[derive(Debug, Clone, Default)]
pub struct ReserveVars {
    pub vars: Vec<Vec<VarId>>,
}

impl ReserveVars {
    pub fn get(&self, p: Product, t: usize) -> Option<VarId> {
        self.vars.get(p as usize).and_then(|v| v.get(t)).copied()
    }

    pub fn all(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().flatten().copied()
    }

    fn sum(&self, up: bool, t: usize) -> LinExpr {
        let mut e = LinExpr::new();
        for p in Product::ALL {
            if p.is_up() == up {
                if let Some(v) = self.get(p, t) {
                    e.add_term(v, 1.0);
                }
            }
        }
        e
    }
}

pub fn declare_reserves(
    model: &mut MixedIntegerModel,
    id: &str,
    products: &[Product],
    block: &Block,
) -> Result<ReserveVars, ModelError> {
    let mut vars = vec![Vec::new(); Product::ALL.len()];
    for &p in products {
        for t in 0..block.hours {
            vars[p as usize].push(model.add_continuous(block.name(p.tag(), id, t), 0.0, f64::INFINITY)?);
        }
    }
    Ok(ReserveVars { vars })
}

/// Policy-zone resources taking part in reserve provision.
pub struct ReserveFleet<'a> {
    pub thermal: Vec<(&'a ThermalUnit, &'a ThermalVars, &'a ReserveVars)>,
    pub hydro: Vec<(&'a HydroResource, &'a HydroVars, &'a ReserveVars)>,
    pub storage: Vec<(&'a StorageResource, &'a StorageVars, &'a ReserveVars, LinExpr)>,
    /// Wind and solar resources that can curtail.
    pub variable: Vec<(&'a RenewableResource, &'a RenewableVars, &'a ReserveVars)>,
}

/// Per-resource headroom/footroom limits and policy-zone requirements.
/// Every product an hour holds shares the resource's single headroom pool.
pub fn build_reserve_constraints(
    model: &mut MixedIntegerModel,
    zone: &Zone,
    fleet: &ReserveFleet<'_>,
    block: &Block,
) -> Result<Vec<RowId>, BuildError> {
    let spec = &zone.reserves;
    let load = hourly(&zone.load, &zone.id, "load", block)?;
    let missing = |name: &'static str| BuildError::DataGap {
        resource: zone.id.clone(),
        series: name,
        year: block.year,
        week: block.week,
        hour: 0,
    };
    let lfu = hourly(
        spec.load_following_up.as_ref().ok_or_else(|| missing("load following up"))?,
        &zone.id,
        "load following up",
        block,
    )?;
    let lfd = hourly(
        spec.load_following_down.as_ref().ok_or_else(|| missing("load following down"))?,
        &zone.id,
        "load following down",
        block,
    )?;
    let mut rows = Vec::new();
    for t in 0..block.hours {
        for (u, x, r) in &fleet.thermal {
            let mut e = r.sum(true, t);
            e.add_term(x.p[t], 1.0).add_term(x.h[t], -1.0);
            row(model, &mut rows, block.name("rsv_head", &u.id, t), e, Sense::Le)?;
            let mut e = r.sum(false, t).scaled(-1.0);
            e.add_term(x.p[t], 1.0).add_term(x.v[t], -u.p_min);
            row(model, &mut rows, block.name("rsv_foot", &u.id, t), e, Sense::Ge)?;
            if let Some(fr) = r.get(Product::FreqResponse, t) {
                let mut e = LinExpr::term(fr, 1.0);
                e.add_term(x.p[t], -u.freq_response_fraction);
                row(model, &mut rows, block.name("rsv_frcap", &u.id, t), e, Sense::Le)?;
            }
            let mut up = LinExpr::new();
            for p in [Product::RegUp, Product::Spin, Product::LoadFollowUp] {
                if let Some(v) = r.get(p, t) {
                    up.add_term(v, 1.0);
                }
            }
            up.add_constant(-u.ten_minute_ramp);
            row(model, &mut rows, block.name("rsv_tmr_up", &u.id, t), up, Sense::Le)?;
            let mut dn = r.sum(false, t);
            dn.add_constant(-u.ten_minute_ramp);
            row(model, &mut rows, block.name("rsv_tmr_dn", &u.id, t), dn, Sense::Le)?;
        }
        for (h, x, r) in &fleet.hydro {
            let mut e = r.sum(true, t);
            e.add_term(x.p[t], 1.0).add_constant(-h.p_max);
            row(model, &mut rows, block.name("rsv_head", &h.id, t), e, Sense::Le)?;
            let mut e = r.sum(false, t).scaled(-1.0);
            e.add_term(x.p[t], 1.0).add_constant(-h.p_min);
            row(model, &mut rows, block.name("rsv_foot", &h.id, t), e, Sense::Ge)?;
        }
        for (s, x, r, power) in &fleet.storage {
            let mut e = r.sum(true, t);
            e.add_term(x.pd[t], 1.0).add_term(x.pc[t], -1.0);
            e.add_expr(power, -s.discharge_rate_per_mw);
            row(model, &mut rows, block.name("rsv_head", &s.id, t), e, Sense::Le)?;
            let mut e = r.sum(false, t);
            e.add_term(x.pc[t], 1.0).add_term(x.pd[t], -1.0);
            e.add_expr(power, -s.charge_rate_per_mw);
            row(model, &mut rows, block.name("rsv_foot", &s.id, t), e, Sense::Le)?;
        }
        for (g, x, r) in &fleet.variable {
            if let (Some(v), Some(c)) = (r.get(Product::LoadFollowUp, t), &x.curt) {
                let mut e = LinExpr::term(v, 1.0);
                e.add_term(c[t], -1.0);
                row(model, &mut rows, block.name("rsv_head", &g.id, t), e, Sense::Le)?;
            }
            if let Some(v) = r.get(Product::LoadFollowDown, t) {
                let mut e = LinExpr::term(v, 1.0);
                e.add_term(x.p[t], -1.0);
                row(model, &mut rows, block.name("rsv_foot", &g.id, t), e, Sense::Le)?;
            }
        }

        let total = |p: Product, with_variable: bool| {
            let mut e = LinExpr::new();
            let groups = fleet
                .thermal
                .iter()
                .map(|x| x.2)
                .chain(fleet.hydro.iter().map(|x| x.2))
                .chain(fleet.storage.iter().map(|x| x.2));
            for r in groups {
                if let Some(v) = r.get(p, t) {
                    e.add_term(v, 1.0);
                }
            }
            if with_variable {
                for (_, _, r) in &fleet.variable {
                    if let Some(v) = r.get(p, t) {
                        e.add_term(v, 1.0);
                    }
                }
            }
            e
        };
        let zid = &zone.id;
        let mut e = total(Product::FreqResponse, false);
        e.add_constant(-spec.freq_response_mw);
        row(model, &mut rows, block.name("req_fr", zid, t), e, Sense::Ge)?;
        let mut e = LinExpr::constant(-spec.freq_response_min_battery_gas_fraction * spec.freq_response_mw);
        for r in fleet.thermal.iter().map(|x| x.2).chain(fleet.storage.iter().map(|x| x.2)) {
            if let Some(v) = r.get(Product::FreqResponse, t) {
                e.add_term(v, 1.0);
            }
        }
        row(model, &mut rows, block.name("req_fr_bg", zid, t), e, Sense::Ge)?;
        for (p, frac, tag) in [
            (Product::RegUp, spec.regulation_up_fraction_of_load, "req_regup"),
            (Product::RegDown, spec.regulation_down_fraction_of_load, "req_regdn"),
            (Product::Spin, spec.spin_fraction_of_load, "req_spin"),
        ] {
            let mut e = total(p, false);
            e.add_constant(-frac * load[t]);
            row(model, &mut rows, block.name(tag, zid, t), e, Sense::Ge)?;
        }
        for (p, req, tag, cap_tag) in [
            (Product::LoadFollowUp, lfu[t], "req_lfup", "cap_lfup"),
            (Product::LoadFollowDown, lfd[t], "req_lfdn", "cap_lfdn"),
        ] {
            let mut e = total(p, true);
            e.add_constant(-req);
            row(model, &mut rows, block.name(tag, zid, t), e, Sense::Ge)?;
            if !fleet.variable.is_empty() {
                let mut e = LinExpr::constant(-0.5 * req);
                for (_, _, r) in &fleet.variable {
                    if let Some(v) = r.get(p, t) {
                        e.add_term(v, 1.0);
                    }
                }
                row(model, &mut rows, block.name(cap_tag, zid, t), e, Sense::Le)?;
            }
        }
    }
    Ok(rows)
}

/// Hour-summed generation cost of one block: cycling, no-load, fuel,
/// wheeling on both flow directions and curtailment.
pub fn uc_cost_expression(
    thermal: &[(&ThermalUnit, &ThermalVars)],
    lines: &[(&Line, &LineVars)],
    renewables: &[(&RenewableResource, &RenewableVars)],
) -> LinExpr {
    let mut e = LinExpr::new();
    for (u, x) in thermal {
        for t in 0..x.v.len() {
            e.add_term(x.s[t], u.startup_cost)
                .add_term(x.d[t], u.shutdown_cost)
                .add_term(x.v[t], u.gen_cost_intercept)
                .add_term(x.p[t], u.gen_cost_slope);
        }
    }
    for (l, x) in lines {
        for t in 0..x.fp.len() {
            e.add_term(x.fp[t], l.wheeling_cost).add_term(x.fm[t], l.wheeling_cost);
        }
    }
    for (r, x) in renewables {
        if let Some(c) = &x.curt {
            for &v in c {
                e.add_term(v, r.curtailment_cost);
            }
        }
    }
    e.merged()
}
