//! Monolithic planning model: every (year, week) commitment block wired to
//! the yearly investment layer, with the discounted objective.

use decarb_milp::{LinExpr, MixedIntegerModel, RowId, Sense, VarId};

use crate::planning::{
    add_amortized_builds, build_capacity_linking, build_elcc_and_prm, build_emissions_constraint,
    build_rps_constraint, build_thermal_linking, yearly_weights, CapacityPlan, ReliabilityInputs,
    ThermalPlan,
};
use crate::scenario::{ElccAxis, ScenarioConfig};
use crate::uc::{self, Block, BuildError, HydroVars, LineVars, Product, RenewableVars, ReserveFleet, ReserveVars, StorageVars, ThermalVars};

/// Variables of one (year, week) block.
#[derive(Debug, Clone)]
pub struct BlockVars {
    pub year: usize,
    pub week: usize,
    pub block: Block,
    pub thermal: Vec<ThermalVars>,
    pub thermal_reserves: Vec<Option<ReserveVars>>,
    pub renewables: Vec<RenewableVars>,
    pub renewable_reserves: Vec<Option<ReserveVars>>,
    pub hydro: Vec<HydroVars>,
    pub hydro_reserves: Vec<Option<ReserveVars>>,
    pub storage: Vec<StorageVars>,
    pub storage_reserves: Vec<Option<ReserveVars>>,
    pub lines: Vec<LineVars>,
}

#[derive(Debug, Clone)]
pub struct StoragePlan {
    pub power: CapacityPlan,
    pub energy: CapacityPlan,
}

#[derive(Debug, Clone, Copy)]
pub struct BalanceRow {
    pub zone: usize,
    pub block: usize,
    pub hour: usize,
    pub row: RowId,
}

/// Cost expressions by category. Generation is per block and unweighted;
/// maintenance and investment are annual.
#[derive(Debug, Clone)]
pub struct CostLedger {
    pub generation: Vec<LinExpr>,
    pub maintenance: Vec<LinExpr>,
    pub investment: Vec<LinExpr>,
}

#[derive(Debug, Clone)]
pub struct PlanningModel {
    pub model: MixedIntegerModel,
    pub years: Vec<i32>,
    pub year_weights: Vec<f64>,
    pub week_weights: Vec<f64>,
    pub blocks: Vec<BlockVars>,
    pub thermal_plans: Vec<ThermalPlan>,
    pub renewable_plans: Vec<CapacityPlan>,
    pub storage_plans: Vec<StoragePlan>,
    pub balance: Vec<BalanceRow>,
    pub ledger: CostLedger,
    /// Week-weighted policy-zone emissions per year, in tons.
    pub emissions: Vec<LinExpr>,
    pub emissions_rows: Vec<Option<RowId>>,
    pub rps_rows: Vec<Option<RowId>>,
    pub prm_rows: Vec<Option<RowId>>,
}

impl PlanningModel {
    pub fn block_index(&self, year: usize, week: usize) -> usize {
        year * self.week_weights.len() + week
    }

    /// Every variable belonging to thermal unit `u`, investment included.
    pub fn thermal_unit_vars(&self, u: usize) -> Vec<VarId> {
        let mut out: Vec<VarId> = Vec::new();
        for b in &self.blocks {
            out.extend(b.thermal[u].all());
            if let Some(r) = &b.thermal_reserves[u] {
                out.extend(r.all());
            }
        }
        out.extend(self.thermal_plans[u].all());
        out
    }

    /// Continuous power variables of non-thermal resources and lines.
    pub fn non_thermal_power_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for r in &b.renewables {
                out.extend(&r.p);
                if let Some(c) = &r.curt {
                    out.extend(c);
                }
            }
            for h in &b.hydro {
                out.extend(&h.p);
            }
            for s in &b.storage {
                out.extend(&s.pc);
                out.extend(&s.pd);
            }
            for l in &b.lines {
                out.extend(&l.fp);
                out.extend(&l.fm);
            }
        }
        out
    }

    /// Evaluates each cost category at `x`: per-year annual generation,
    /// maintenance and investment.
    pub fn cost_breakdown(&self, x: &[f64]) -> Vec<(f64, f64, f64)> {
        let nw = self.week_weights.len();
        (0..self.years.len())
            .map(|y| {
                let gen: f64 = (0..nw)
                    .map(|w| self.week_weights[w] * self.ledger.generation[y * nw + w].evaluate(x))
                    .sum();
                (gen, self.ledger.maintenance[y].evaluate(x), self.ledger.investment[y].evaluate(x))
            })
            .collect()
    }
}

/// Builds the monolithic model with zonal balance enforced as equalities.
pub fn build_planning_model(cfg: &ScenarioConfig) -> Result<PlanningModel, BuildError> {
    let years = cfg.time.years.clone();
    let ny = years.len();
    let weeks = &cfg.time.weeks;
    let week_weights: Vec<f64> = weeks.iter().map(|w| w.weight).collect();
    let policy = &cfg.policy;
    let rate = policy.discount_rate;
    let year_weights = yearly_weights(policy, &years);
    let policy_zone = cfg
        .zones
        .iter()
        .position(|z| z.is_policy_zone)
        .ok_or_else(|| BuildError::Config {
            resource: "zones".into(),
            message: "no policy zone".into(),
        })?;
    let pz_id = cfg.zones[policy_zone].id.clone();
    let in_pz = |zone: &str| zone == pz_id;
    let zone_of = |zone: &str, what: &str| {
        cfg.zone_index(zone).ok_or_else(|| BuildError::Config {
            resource: what.to_string(),
            message: format!("unknown zone `{zone}`"),
        })
    };

    let mut model = MixedIntegerModel::new(cfg.id.clone());
    let mut maintenance: Vec<LinExpr> = vec![LinExpr::new(); ny];
    let mut investment: Vec<LinExpr> = vec![LinExpr::new(); ny];

    let mut thermal_plans = Vec::new();
    for u in &cfg.thermal {
        let (plan, _) = build_thermal_linking(&mut model, &u.id, &u.planned_status_by_year, u.buildable, u.retirable, &years)?;
        for (y, iu) in plan.iu.iter().enumerate() {
            maintenance[y].add_term(*iu, u.maintenance_cost);
        }
        let life = u.financing_life_years.unwrap_or(policy.financing_life_years);
        add_amortized_builds(&mut investment, &plan.build, |y| u.capital_cost_by_year.at(y), rate, life, &years);
        thermal_plans.push(plan);
    }
    let mut renewable_plans = Vec::new();
    for r in &cfg.renewables {
        let (plan, _) = build_capacity_linking(&mut model, "ic", &r.id, &r.planned_capacity_by_year, r.buildable_limit, r.retirable, &years)?;
        for (y, ic) in plan.ic.iter().enumerate() {
            maintenance[y].add_term(*ic, r.maintenance_cost);
        }
        let life = r.financing_life_years.unwrap_or(policy.financing_life_years);
        add_amortized_builds(&mut investment, &plan.build, |y| r.capital_cost_by_year.at(y), rate, life, &years);
        renewable_plans.push(plan);
    }
    let mut storage_plans = Vec::new();
    for s in &cfg.storage {
        let (power, _) = build_capacity_linking(&mut model, "ic", &s.id, &s.planned_power_by_year, s.buildable_power_limit, s.retirable, &years)?;
        let (energy, _) = build_capacity_linking(&mut model, "ice", &s.id, &s.planned_energy_by_year, s.buildable_energy_limit, s.retirable, &years)?;
        for y in 0..ny {
            maintenance[y].add_term(power.ic[y], s.maintenance_cost_power);
            maintenance[y].add_term(energy.ic[y], s.maintenance_cost_energy);
        }
        let life = s.financing_life_years.unwrap_or(policy.financing_life_years);
        add_amortized_builds(&mut investment, &power.build, |y| s.capital_cost_power_by_year.at(y), rate, life, &years);
        add_amortized_builds(&mut investment, &energy.build, |y| s.capital_cost_energy_by_year.at(y), rate, life, &years);
        storage_plans.push(StoragePlan { power, energy });
    }
    for h in &cfg.hydro {
        for m in maintenance.iter_mut() {
            m.add_constant(h.p_max * h.maintenance_cost);
        }
    }

    let mut blocks = Vec::new();
    let mut balance = Vec::new();
    let mut generation = Vec::new();
    let mut emissions: Vec<LinExpr> = vec![LinExpr::new(); ny];
    let mut eligible: Vec<LinExpr> = vec![LinExpr::new(); ny];
    let mut weighted_load = vec![0.0; ny];

    for (yi, &year) in years.iter().enumerate() {
        for (wi, ws) in weeks.iter().enumerate() {
            let block = Block {
                year,
                week: ws.week_id,
                hours: cfg.time.hours_per_week,
            };
            let mut injections = vec![vec![LinExpr::new(); block.hours]; cfg.zones.len()];

            let mut thermal = Vec::new();
            let mut thermal_reserves = Vec::new();
            for (ui, u) in cfg.thermal.iter().enumerate() {
                let available = u.buildable || u.planned_status_by_year.at(year) > 0.5;
                let x = uc::declare_thermal(&mut model, u, &block, available)?;
                uc::build_thermal_constraints(&mut model, u, &x, &block)?;
                if u.buildable || u.retirable {
                    let iu = thermal_plans[ui].iu[yi];
                    for t in 0..block.hours {
                        let mut e = LinExpr::term(x.v[t], 1.0);
                        e.add_term(iu, -1.0);
                        model.add_row(block.name("gate", &u.id, t), &e, Sense::Le, 0.0)?;
                    }
                }
                let z = zone_of(&u.zone_id, &u.id)?;
                for t in 0..block.hours {
                    injections[z][t].add_term(x.p[t], 1.0);
                }
                thermal_reserves.push(if in_pz(&u.zone_id) {
                    Some(uc::declare_reserves(&mut model, &u.id, &Product::ALL, &block)?)
                } else {
                    None
                });
                thermal.push(x);
            }

            let mut renewables = Vec::new();
            let mut renewable_reserves = Vec::new();
            for (ri, r) in cfg.renewables.iter().enumerate() {
                let x = uc::declare_renewable(&mut model, r, &block)?;
                uc::build_renewable_constraints(&mut model, r, &x, &renewable_plans[ri].expr(yi), &block)?;
                let z = zone_of(&r.zone_id, &r.id)?;
                for t in 0..block.hours {
                    injections[z][t].add_term(x.p[t], 1.0);
                }
                let curtails = !r.is_firm && r.elcc_axis != ElccAxis::None;
                renewable_reserves.push(if in_pz(&r.zone_id) && curtails {
                    Some(uc::declare_reserves(&mut model, &r.id, &[Product::LoadFollowUp, Product::LoadFollowDown], &block)?)
                } else {
                    None
                });
                if r.rps_eligible {
                    for &p in &x.p {
                        eligible[yi].add_term(p, ws.weight);
                    }
                }
                renewables.push(x);
            }

            let mut hydro = Vec::new();
            let mut hydro_reserves = Vec::new();
            for h in &cfg.hydro {
                let x = uc::declare_hydro(&mut model, h, &block)?;
                uc::build_hydro_constraints(&mut model, h, &x, &block)?;
                let z = zone_of(&h.zone_id, &h.id)?;
                for t in 0..block.hours {
                    injections[z][t].add_term(x.p[t], 1.0);
                }
                hydro_reserves.push(if in_pz(&h.zone_id) {
                    Some(uc::declare_reserves(&mut model, &h.id, &Product::ALL, &block)?)
                } else {
                    None
                });
                hydro.push(x);
            }

            let mut storage = Vec::new();
            let mut storage_reserves = Vec::new();
            for (si, s) in cfg.storage.iter().enumerate() {
                let x = uc::declare_storage(&mut model, s, &block)?;
                let max_power = years
                    .iter()
                    .map(|&y| s.planned_power_by_year.at(y))
                    .fold(0.0, f64::max)
                    + s.buildable_power_limit;
                let big_m = max_power * s.charge_rate_per_mw.max(s.discharge_rate_per_mw);
                let plan = &storage_plans[si];
                uc::build_storage_constraints(&mut model, s, &x, &plan.power.expr(yi), &plan.energy.expr(yi), big_m, &block)?;
                let z = zone_of(&s.zone_id, &s.id)?;
                for t in 0..block.hours {
                    injections[z][t].add_term(x.pd[t], 1.0).add_term(x.pc[t], -1.0);
                }
                storage_reserves.push(if in_pz(&s.zone_id) {
                    Some(uc::declare_reserves(&mut model, &s.id, &Product::ALL, &block)?)
                } else {
                    None
                });
                storage.push(x);
            }

            let mut lines = Vec::new();
            for l in &cfg.lines {
                lines.push(uc::declare_line(&mut model, l, &block)?);
            }
            let residual = uc::build_network_and_balance(&cfg.zones, &cfg.lines, &lines, &injections, &block)?;
            let bi = blocks.len();
            for (z, zone) in cfg.zones.iter().enumerate() {
                for (t, r) in residual[z].iter().enumerate() {
                    let row = model.add_row(block.name("balance", &zone.id, t), r, Sense::Eq, 0.0)?;
                    balance.push(BalanceRow { zone: z, block: bi, hour: t, row });
                }
            }

            let pz = &cfg.zones[policy_zone];
            let fleet = ReserveFleet {
                thermal: cfg
                    .thermal
                    .iter()
                    .zip(&thermal)
                    .zip(&thermal_reserves)
                    .filter_map(|((u, x), r)| r.as_ref().map(|r| (u, x, r)))
                    .collect(),
                hydro: cfg
                    .hydro
                    .iter()
                    .zip(&hydro)
                    .zip(&hydro_reserves)
                    .filter_map(|((h, x), r)| r.as_ref().map(|r| (h, x, r)))
                    .collect(),
                storage: cfg
                    .storage
                    .iter()
                    .enumerate()
                    .zip(&storage)
                    .zip(&storage_reserves)
                    .filter_map(|(((si, s), x), r)| r.as_ref().map(|r| (s, x, r, storage_plans[si].power.expr(yi))))
                    .collect(),
                variable: cfg
                    .renewables
                    .iter()
                    .zip(&renewables)
                    .zip(&renewable_reserves)
                    .filter_map(|((g, x), r)| r.as_ref().map(|r| (g, x, r)))
                    .collect(),
            };
            uc::build_reserve_constraints(&mut model, pz, &fleet, &block)?;

            let cost = uc::uc_cost_expression(
                &cfg.thermal.iter().zip(&thermal).collect::<Vec<_>>(),
                &cfg.lines.iter().zip(&lines).collect::<Vec<_>>(),
                &cfg.renewables.iter().zip(&renewables).collect::<Vec<_>>(),
            );
            generation.push(cost);

            for (u, x) in cfg.thermal.iter().zip(&thermal) {
                if in_pz(&u.zone_id) && u.emissions_rate > 0.0 {
                    for &p in &x.p {
                        emissions[yi].add_term(p, ws.weight * u.emissions_rate);
                    }
                }
            }
            for (l, x) in cfg.lines.iter().zip(&lines) {
                if l.import_emissions_rate == 0.0 {
                    continue;
                }
                let imports = if in_pz(&l.to_zone) {
                    Some(&x.fp)
                } else if in_pz(&l.from_zone) {
                    Some(&x.fm)
                } else {
                    None
                };
                for &f in imports.into_iter().flatten() {
                    emissions[yi].add_term(f, ws.weight * l.import_emissions_rate);
                }
            }
            let load = uc::hourly(&pz.load, &pz.id, "load", &block)?;
            weighted_load[yi] += ws.weight * load.iter().sum::<f64>();

            blocks.push(BlockVars {
                year: yi,
                week: wi,
                block,
                thermal,
                thermal_reserves,
                renewables,
                renewable_reserves,
                hydro,
                hydro_reserves,
                storage,
                storage_reserves,
                lines,
            });
        }
    }

    let mut emissions_rows = vec![None; ny];
    let mut rps_rows = vec![None; ny];
    let mut prm_rows = vec![None; ny];
    for (yi, &year) in years.iter().enumerate() {
        emissions[yi] = emissions[yi].merged();
        if let Some(cap) = policy.emissions_cap_by_year.as_ref().and_then(|c| c.get(year)) {
            emissions_rows[yi] = Some(build_emissions_constraint(&mut model, year, &emissions[yi], *cap)?);
        }
        let frac = policy.rps_fraction_by_year.at(year);
        if frac > 0.0 {
            rps_rows[yi] = Some(build_rps_constraint(&mut model, year, &eligible[yi].merged(), weighted_load[yi], frac)?);
        }
        let req = policy.prm_requirement_by_year.at(year);
        if req > 0.0 {
            let mut inputs = ReliabilityInputs {
                wind_axis: LinExpr::new(),
                solar_axis: LinExpr::new(),
                storage: Vec::new(),
                firm: LinExpr::new(),
            };
            for (r, plan) in cfg.renewables.iter().zip(&renewable_plans) {
                if !in_pz(&r.zone_id) {
                    continue;
                }
                let mult = r.elcc_axis_multiplier_by_year.at(year);
                match r.elcc_axis {
                    ElccAxis::Wind => {
                        inputs.wind_axis.add_term(plan.ic[yi], mult);
                    }
                    ElccAxis::Solar => {
                        inputs.solar_axis.add_term(plan.ic[yi], mult);
                    }
                    ElccAxis::None => {}
                }
            }
            for (s, plan) in cfg.storage.iter().zip(&storage_plans) {
                if in_pz(&s.zone_id) {
                    inputs.storage.push((
                        s.id.clone(),
                        plan.power.expr(yi),
                        plan.energy.expr(yi),
                        s.elcc_multiplier_by_year.at(year),
                    ));
                }
            }
            for (u, plan) in cfg.thermal.iter().zip(&thermal_plans) {
                if in_pz(&u.zone_id) {
                    inputs.firm.add_term(plan.iu[yi], u.p_max * u.nqc_fraction);
                }
            }
            for h in &cfg.hydro {
                if in_pz(&h.zone_id) {
                    inputs.firm.add_constant(h.p_max * h.nqc_fraction);
                }
            }
            let (vars, _) = build_elcc_and_prm(&mut model, year, &cfg.elcc, &inputs, req)?;
            prm_rows[yi] = Some(vars.prm_row);
        }
    }

    let nw = week_weights.len();
    for yi in 0..ny {
        let wy = year_weights[yi];
        for wi in 0..nw {
            model.add_objective(&generation[yi * nw + wi], wy * week_weights[wi]);
        }
        model.add_objective(&maintenance[yi], wy);
        model.add_objective(&investment[yi], wy);
    }

    Ok(PlanningModel {
        model,
        years,
        year_weights,
        week_weights,
        blocks,
        thermal_plans,
        renewable_plans,
        storage_plans,
        balance,
        ledger: CostLedger {
            generation,
            maintenance: maintenance.into_iter().map(|m| m.merged()).collect(),
            investment: investment.into_iter().map(|m| m.merged()).collect(),
        },
        emissions,
        emissions_rows,
        rps_rows,
        prm_rows,
    })
}
