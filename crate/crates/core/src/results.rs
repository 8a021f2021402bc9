//! Solved plans as tables: costs, fleet, dispatch, state of charge,
//! emissions and the coordination trace.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::PlanningModel;
use crate::scenario::ScenarioConfig;
use crate::slblr::IterationRecord;

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub year: i32,
    pub year_weight: f64,
    pub generation: f64,
    pub maintenance: f64,
    pub investment: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetRow {
    pub year: i32,
    pub resource: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchRow {
    pub year: i32,
    pub week: u32,
    pub hour: usize,
    pub resource: String,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocRow {
    pub year: i32,
    pub week: u32,
    pub hour: usize,
    pub storage: String,
    pub soc_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionsRow {
    pub year: i32,
    pub tons: f64,
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub k: usize,
    pub l_k: f64,
    pub q_bar: f64,
    pub stepsize: f64,
    pub r_norm1: f64,
    pub r_norm2_sq: f64,
    pub reset: bool,
    pub groups: String,
}

impl From<&IterationRecord> for IterationRow {
    fn from(r: &IterationRecord) -> Self {
        IterationRow {
            k: r.k,
            l_k: r.l_k,
            q_bar: r.q_bar,
            stepsize: r.stepsize,
            r_norm1: r.r_norm1,
            r_norm2_sq: r.r_norm2_sq,
            reset: r.reset,
            groups: r.groups.join(";"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostTotals {
    pub generation: f64,
    pub maintenance: f64,
    pub investment: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub method: String,
    pub seed: u64,
    pub status: String,
    /// Discounted objective of the returned plan.
    pub objective: f64,
    /// Undiscounted annual costs summed over modeled years.
    pub totals: CostTotals,
    pub lower_bound: Option<f64>,
    pub lower_bound_certified: bool,
    pub duality_gap: Option<f64>,
    pub iterations: usize,
    pub stop_reason: Option<String>,
    pub max_constraint_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub summary: Summary,
    pub costs: Vec<CostRow>,
    pub fleet: Vec<FleetRow>,
    pub dispatch: Vec<DispatchRow>,
    pub soc: Vec<SocRow>,
    pub emissions: Vec<EmissionsRow>,
    pub iterations: Vec<IterationRow>,
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else {
        v
    }
}

/// How a plan was obtained.
#[derive(Debug, Clone)]
pub struct SolveMeta {
    pub method: String,
    pub seed: u64,
    pub status: String,
    pub lower_bound: Option<f64>,
    pub lower_bound_certified: bool,
    pub iterations: Vec<IterationRecord>,
    pub stop_reason: Option<String>,
}

impl ResultSet {
    pub fn from_solution(cfg: &ScenarioConfig, pm: &PlanningModel, x: &[f64], meta: SolveMeta) -> Self {
        let breakdown = pm.cost_breakdown(x);
        let mut totals = CostTotals::default();
        let costs: Vec<CostRow> = pm
            .years
            .iter()
            .zip(&breakdown)
            .zip(&pm.year_weights)
            .map(|((&year, &(g, m, i)), &w)| {
                totals.generation += g;
                totals.maintenance += m;
                totals.investment += i;
                totals.total += g + m + i;
                CostRow {
                    year,
                    year_weight: w,
                    generation: g,
                    maintenance: m,
                    investment: i,
                    total: g + m + i,
                }
            })
            .collect();

        let mut fleet = Vec::new();
        for (j, &year) in pm.years.iter().enumerate() {
            for (u, plan) in cfg.thermal.iter().zip(&pm.thermal_plans) {
                fleet.push(FleetRow {
                    year,
                    resource: u.id.clone(),
                    metric: "status".into(),
                    value: clean(x[plan.iu[j].0]),
                });
            }
            for (r, plan) in cfg.renewables.iter().zip(&pm.renewable_plans) {
                fleet.push(FleetRow {
                    year,
                    resource: r.id.clone(),
                    metric: "capacity_mw".into(),
                    value: clean(x[plan.ic[j].0]),
                });
            }
            for (s, plan) in cfg.storage.iter().zip(&pm.storage_plans) {
                fleet.push(FleetRow {
                    year,
                    resource: s.id.clone(),
                    metric: "power_mw".into(),
                    value: clean(x[plan.power.ic[j].0]),
                });
                fleet.push(FleetRow {
                    year,
                    resource: s.id.clone(),
                    metric: "energy_mwh".into(),
                    value: clean(x[plan.energy.ic[j].0]),
                });
            }
        }

        let mut dispatch = Vec::new();
        let mut soc = Vec::new();
        for b in &pm.blocks {
            let (year, week) = (b.block.year, b.block.week);
            for hour in 0..b.block.hours {
                let mut push = |resource: &str, quantity: &str, value: f64| {
                    dispatch.push(DispatchRow {
                        year,
                        week,
                        hour,
                        resource: resource.to_string(),
                        quantity: quantity.to_string(),
                        value: clean(value),
                    })
                };
                for (u, v) in cfg.thermal.iter().zip(&b.thermal) {
                    push(&u.id, "commitment", x[v.v[hour].0]);
                    push(&u.id, "power", x[v.p[hour].0]);
                }
                for (r, v) in cfg.renewables.iter().zip(&b.renewables) {
                    push(&r.id, "power", x[v.p[hour].0]);
                    if let Some(c) = &v.curt {
                        push(&r.id, "curtailment", x[c[hour].0]);
                    }
                }
                for (h, v) in cfg.hydro.iter().zip(&b.hydro) {
                    push(&h.id, "power", x[v.p[hour].0]);
                }
                for (s, v) in cfg.storage.iter().zip(&b.storage) {
                    push(&s.id, "charge", x[v.pc[hour].0]);
                    push(&s.id, "discharge", x[v.pd[hour].0]);
                }
                for (l, v) in cfg.lines.iter().zip(&b.lines) {
                    push(&l.id, "flow", x[v.fp[hour].0] - x[v.fm[hour].0]);
                }
                for (s, v) in cfg.storage.iter().zip(&b.storage) {
                    soc.push(SocRow {
                        year,
                        week,
                        hour,
                        storage: s.id.clone(),
                        soc_mwh: clean(x[v.soc[hour].0]),
                    });
                }
            }
        }

        let emissions = pm
            .years
            .iter()
            .enumerate()
            .map(|(j, &year)| EmissionsRow {
                year,
                tons: clean(pm.emissions[j].evaluate(x)),
                cap: cfg.policy.emissions_cap_by_year.as_ref().and_then(|c| c.get(year).copied()),
            })
            .collect();

        let objective = pm.model.evaluate_objective(x);
        let duality_gap = meta
            .lower_bound
            .map(|lb| ((objective - lb) / objective.abs().max(1e-9)).max(0.0));
        let summary = Summary {
            scenario: cfg.id.clone(),
            method: meta.method,
            seed: meta.seed,
            status: meta.status,
            objective,
            totals,
            lower_bound: meta.lower_bound,
            lower_bound_certified: meta.lower_bound_certified,
            duality_gap,
            iterations: meta.iterations.len(),
            stop_reason: meta.stop_reason,
            max_constraint_violation: pm.model.max_row_violation(x).max(pm.model.max_bound_violation(x)),
        };
        ResultSet {
            summary,
            costs,
            fleet,
            dispatch,
            soc,
            emissions,
            iterations: meta.iterations.iter().map(IterationRow::from).collect(),
        }
    }
}

pub const COSTS_FILE: &str = "costs_by_year.csv";
pub const FLEET_FILE: &str = "fleet_by_year.csv";
pub const DISPATCH_FILE: &str = "dispatch.csv";
pub const SOC_FILE: &str = "soc.csv";
pub const EMISSIONS_FILE: &str = "emissions.csv";
pub const ITERATIONS_FILE: &str = "iterations.csv";
pub const SUMMARY_FILE: &str = "summary.json";

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T], header: &[&str]) -> Result<PathBuf, ResultsError> {
    let path = dir.join(name);
    let err = |source| ResultsError::Csv { path: path.clone(), source };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|source| ResultsError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn read_csv<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>, ResultsError> {
    let path = dir.join(name);
    let err = |source| ResultsError::Csv { path: path.clone(), source };
    let mut r = csv::Reader::from_path(&path).map_err(err)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ResultsError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| ResultsError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| ResultsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<(), ResultsError> {
    fs::create_dir_all(dir).map_err(|source| ResultsError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes the result tables and `summary.json`; returns the files written.
pub fn write_results(rs: &ResultSet, dir: &Path) -> Result<Vec<PathBuf>, ResultsError> {
    create_dir(dir)?;
    let files = vec![
        write_csv(dir, COSTS_FILE, &rs.costs, &["year", "year_weight", "generation", "maintenance", "investment", "total"])?,
        write_csv(dir, FLEET_FILE, &rs.fleet, &["year", "resource", "metric", "value"])?,
        write_csv(dir, DISPATCH_FILE, &rs.dispatch, &["year", "week", "hour", "resource", "quantity", "value"])?,
        write_csv(dir, SOC_FILE, &rs.soc, &["year", "week", "hour", "storage", "soc_mwh"])?,
        write_csv(dir, EMISSIONS_FILE, &rs.emissions, &["year", "tons", "cap"])?,
        write_csv(
            dir,
            ITERATIONS_FILE,
            &rs.iterations,
            &["k", "l_k", "q_bar", "stepsize", "r_norm1", "r_norm2_sq", "reset", "groups"],
        )?,
    ];
    let summary = dir.join(SUMMARY_FILE);
    write_json(&summary, &rs.summary)?;
    let mut files = files;
    files.push(summary);
    Ok(files)
}

pub fn read_results(dir: &Path) -> Result<ResultSet, ResultsError> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|source| ResultsError::Io { path: path.clone(), source })?;
    let summary = serde_json::from_str(&text).map_err(|source| ResultsError::Json { path, source })?;
    Ok(ResultSet {
        summary,
        costs: read_csv(dir, COSTS_FILE)?,
        fleet: read_csv(dir, FLEET_FILE)?,
        dispatch: read_csv(dir, DISPATCH_FILE)?,
        soc: read_csv(dir, SOC_FILE)?,
        emissions: read_csv(dir, EMISSIONS_FILE)?,
        iterations: read_csv(dir, ITERATIONS_FILE)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetPoint {
    pub period: usize,
    pub year: i32,
    pub resource: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub year: i32,
    pub category: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocPoint {
    pub storage: String,
    pub year: i32,
    pub week: u32,
    pub hour: usize,
    pub soc_mwh: f64,
    pub soc_fraction: Option<f64>,
}

/// Long-format tables for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub fleet_over_time: Vec<FleetPoint>,
    pub cost_breakdown: Vec<CostPoint>,
    pub soc_trace: Vec<SocPoint>,
}

pub const REPORT_FLEET_FILE: &str = "report_fleet_over_time.csv";
pub const REPORT_COST_FILE: &str = "report_cost_breakdown.csv";
pub const REPORT_SOC_FILE: &str = "report_soc_trace.csv";

pub fn render_report(rs: &ResultSet) -> ReportBundle {
    let mut years: Vec<i32> = rs.costs.iter().map(|c| c.year).collect();
    for f in &rs.fleet {
        if !years.contains(&f.year) {
            years.push(f.year);
        }
    }
    years.sort_unstable();
    let fleet_over_time = rs
        .fleet
        .iter()
        .map(|f| FleetPoint {
            period: years.iter().position(|&y| y == f.year).unwrap_or(0),
            year: f.year,
            resource: f.resource.clone(),
            metric: f.metric.clone(),
            value: f.value,
        })
        .collect();
    let mut cost_breakdown = Vec::new();
    for c in &rs.costs {
        for (category, value) in [
            ("Op.", c.generation),
            ("Maint.", c.maintenance),
            ("Invest.", c.investment),
            ("Total", c.generation + c.maintenance + c.investment),
        ] {
            cost_breakdown.push(CostPoint {
                year: c.year,
                category: category.into(),
                value,
            });
        }
    }
    let soc_trace = rs
        .soc
        .iter()
        .map(|s| {
            let energy = rs
                .fleet
                .iter()
                .find(|f| f.year == s.year && f.resource == s.storage && f.metric == "energy_mwh")
                .map(|f| f.value);
            SocPoint {
                storage: s.storage.clone(),
                year: s.year,
                week: s.week,
                hour: s.hour,
                soc_mwh: s.soc_mwh,
                soc_fraction: energy.filter(|e| *e > 1e-9).map(|e| s.soc_mwh / e),
            }
        })
        .collect();
    ReportBundle {
        fleet_over_time,
        cost_breakdown,
        soc_trace,
    }
}

pub fn write_report(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>, ResultsError> {
    create_dir(dir)?;
    Ok(vec![
        write_csv(dir, REPORT_FLEET_FILE, &bundle.fleet_over_time, &["period", "year", "resource", "metric", "value"])?,
        write_csv(dir, REPORT_COST_FILE, &bundle.cost_breakdown, &["year", "category", "value"])?,
        write_csv(
            dir,
            REPORT_SOC_FILE,
            &bundle.soc_trace,
            &["storage", "year", "week", "hour", "soc_mwh", "soc_fraction"],
        )?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> ResultSet {
        ResultSet {
            summary: Summary {
                scenario: "s".into(),
                method: "oracle".into(),
                seed: 0,
                status: "optimal".into(),
                objective: 0.0,
                totals: CostTotals::default(),
                lower_bound: None,
                lower_bound_certified: false,
                duality_gap: None,
                iterations: 0,
                stop_reason: None,
                max_constraint_violation: 0.0,
            },
            costs: vec![],
            fleet: vec![],
            dispatch: vec![],
            soc: vec![],
            emissions: vec![],
            iterations: vec![],
        }
    }

    #[test]
    fn empty_horizon_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        write_results(&empty(), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(COSTS_FILE)).unwrap();
        assert_eq!(text, "year,year_weight,generation,maintenance,investment,total\n");
        let back = read_results(dir.path()).unwrap();
        assert_eq!(back, empty());
    }

    #[test]
    fn zero_storage_report_keeps_schema() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = render_report(&empty());
        assert!(bundle.soc_trace.is_empty());
        write_report(&bundle, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(REPORT_SOC_FILE)).unwrap();
        assert_eq!(text, "storage,year,week,hour,soc_mwh,soc_fraction\n");
    }

    #[test]
    fn cost_bundle_identity() {
        let mut rs = empty();
        rs.costs.push(CostRow {
            year: 2023,
            year_weight: 1.0,
            generation: 1.25,
            maintenance: 2.5,
            investment: 0.125,
            total: 3.875,
        });
        let b = render_report(&rs);
        let get = |c: &str| b.cost_breakdown.iter().find(|p| p.category == c).unwrap().value;
        assert_eq!(get("Total"), get("Op.") + get("Maint.") + get("Invest."));
    }
}
