//! Scenario manifest: fleets, zones, lines, schedules and solver settings.
//!
//! The manifest is JSON. Per-year values are written either as a single
//! number (applies to every modeled year) or as an object keyed by year.
//! Hourly data live in CSV files referenced by relative path.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::Series;
use crate::time::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ByYear<T> {
    Constant(T),
    PerYear(BTreeMap<i32, T>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ByYearRepr<T> {
    Constant(T),
    PerYear(BTreeMap<String, T>),
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for ByYear<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match ByYearRepr::deserialize(d)? {
            ByYearRepr::Constant(v) => Ok(ByYear::Constant(v)),
            ByYearRepr::PerYear(m) => m
                .into_iter()
                .map(|(k, v)| {
                    k.trim()
                        .parse::<i32>()
                        .map(|y| (y, v))
                        .map_err(|_| serde::de::Error::custom(format!("`{k}` is not a year")))
                })
                .collect::<Result<_, _>>()
                .map(ByYear::PerYear),
        }
    }
}

impl<T: Clone> ByYear<T> {
    pub fn get(&self, year: i32) -> Option<&T> {
        match self {
            ByYear::Constant(v) => Some(v),
            ByYear::PerYear(m) => m.get(&year),
        }
    }

    pub fn map_years(years: &[i32], f: impl Fn(i32) -> T) -> Self {
        ByYear::PerYear(years.iter().map(|&y| (y, f(y))).collect())
    }
}

impl ByYear<f64> {
    pub fn at(&self, year: i32) -> f64 {
        self.get(year).copied().unwrap_or(0.0)
    }
}

impl<T> Default for ByYear<T>
where
    T: Default,
{
    fn default() -> Self {
        ByYear::Constant(T::default())
    }
}

fn one() -> f64 {
    1.0
}
fn ones() -> ByYear<f64> {
    ByYear::Constant(1.0)
}
fn default_fr_fraction() -> f64 {
    0.08
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalUnit {
    pub id: String,
    pub zone_id: String,
    pub p_min: f64,
    pub p_max: f64,
    pub min_uptime: usize,
    pub min_downtime: usize,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_limit: f64,
    pub shutdown_limit: f64,
    #[serde(default)]
    pub startup_cost: f64,
    #[serde(default)]
    pub shutdown_cost: f64,
    #[serde(default)]
    pub gen_cost_slope: f64,
    #[serde(default)]
    pub gen_cost_intercept: f64,
    #[serde(default)]
    pub emissions_rate: f64,
    #[serde(default)]
    pub nqc_fraction: f64,
    #[serde(default)]
    pub maintenance_cost: f64,
    #[serde(default)]
    pub capital_cost_by_year: ByYear<f64>,
    pub planned_status_by_year: ByYear<f64>,
    #[serde(default)]
    pub retirable: bool,
    #[serde(default)]
    pub buildable: bool,
    pub ten_minute_ramp: f64,
    #[serde(default = "default_fr_fraction")]
    pub freq_response_fraction: f64,
    #[serde(default)]
    pub financing_life_years: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElccAxis {
    Wind,
    Solar,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewableResource {
    pub id: String,
    pub zone_id: String,
    pub production_factor: Series,
    #[serde(default)]
    pub curtailment_cost: f64,
    #[serde(default)]
    pub is_firm: bool,
    #[serde(default)]
    pub rps_eligible: bool,
    pub elcc_axis: ElccAxis,
    #[serde(default = "ones")]
    pub elcc_axis_multiplier_by_year: ByYear<f64>,
    #[serde(default)]
    pub planned_capacity_by_year: ByYear<f64>,
    #[serde(default)]
    pub buildable_limit: f64,
    #[serde(default)]
    pub capital_cost_by_year: ByYear<f64>,
    #[serde(default)]
    pub maintenance_cost: f64,
    #[serde(default)]
    pub retirable: bool,
    #[serde(default)]
    pub financing_life_years: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub year: i32,
    pub week: u32,
    pub mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HydroBudget {
    Uniform(f64),
    Table(Vec<BudgetEntry>),
}

impl HydroBudget {
    pub fn get(&self, year: i32, week: u32) -> Option<f64> {
        match self {
            HydroBudget::Uniform(v) => Some(*v),
            HydroBudget::Table(rows) => rows
                .iter()
                .find(|r| r.year == year && r.week == week)
                .map(|r| r.mwh),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroResource {
    pub id: String,
    pub zone_id: String,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp_limit: f64,
    pub weekly_energy_budget: HydroBudget,
    #[serde(default)]
    pub nqc_fraction: f64,
    #[serde(default)]
    pub maintenance_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageResource {
    pub id: String,
    pub zone_id: String,
    /// Charge rate per MW of installed power capacity.
    #[serde(default = "one")]
    pub charge_rate_per_mw: f64,
    /// Discharge rate per MW of installed power capacity.
    #[serde(default = "one")]
    pub discharge_rate_per_mw: f64,
    #[serde(default)]
    pub soc_min_fraction: f64,
    #[serde(default = "one")]
    pub soc_max_fraction: f64,
    #[serde(default = "one")]
    pub charge_efficiency: f64,
    #[serde(default = "one")]
    pub discharge_efficiency: f64,
    #[serde(default)]
    pub self_discharge: f64,
    #[serde(default = "ones")]
    pub elcc_multiplier_by_year: ByYear<f64>,
    #[serde(default)]
    pub maintenance_cost_power: f64,
    #[serde(default)]
    pub maintenance_cost_energy: f64,
    #[serde(default)]
    pub capital_cost_power_by_year: ByYear<f64>,
    #[serde(default)]
    pub capital_cost_energy_by_year: ByYear<f64>,
    #[serde(default)]
    pub planned_power_by_year: ByYear<f64>,
    #[serde(default)]
    pub planned_energy_by_year: ByYear<f64>,
    #[serde(default)]
    pub buildable_power_limit: f64,
    #[serde(default)]
    pub buildable_energy_limit: f64,
    #[serde(default)]
    pub retirable: bool,
    #[serde(default)]
    pub financing_life_years: Option<u32>,
}

fn d770() -> f64 {
    770.0
}
fn d_half() -> f64 {
    0.5
}
fn d_pct() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReserveSpec {
    #[serde(default = "d770")]
    pub freq_response_mw: f64,
    #[serde(default = "d_half")]
    pub freq_response_min_battery_gas_fraction: f64,
    #[serde(default = "d_pct")]
    pub regulation_up_fraction_of_load: f64,
    #[serde(default = "d_pct")]
    pub regulation_down_fraction_of_load: f64,
    #[serde(default = "d_pct")]
    pub spin_fraction_of_load: f64,
    #[serde(default)]
    pub load_following_up: Option<Series>,
    #[serde(default)]
    pub load_following_down: Option<Series>,
}

impl Default for ReserveSpec {
    fn default() -> Self {
        ReserveSpec {
            freq_response_mw: d770(),
            freq_response_min_battery_gas_fraction: d_half(),
            regulation_up_fraction_of_load: d_pct(),
            regulation_down_fraction_of_load: d_pct(),
            spin_fraction_of_load: d_pct(),
            load_following_up: None,
            load_following_down: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub id: String,
    pub load: Series,
    #[serde(default)]
    pub is_policy_zone: bool,
    #[serde(default)]
    pub reserves: ReserveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub from_zone: String,
    pub to_zone: String,
    pub flow_min: f64,
    pub flow_max: f64,
    #[serde(default)]
    pub wheeling_cost: f64,
    #[serde(default)]
    pub import_emissions_rate: f64,
}

fn d_rate() -> f64 {
    0.05
}
fn d_horizon() -> i32 {
    2065
}
fn d_life() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySchedules {
    #[serde(default)]
    pub emissions_cap_by_year: Option<ByYear<f64>>,
    #[serde(default)]
    pub rps_fraction_by_year: ByYear<f64>,
    #[serde(default)]
    pub prm_requirement_by_year: ByYear<f64>,
    #[serde(default = "d_rate")]
    pub discount_rate: f64,
    /// Defaults to the first modeled year.
    #[serde(default)]
    pub base_year: Option<i32>,
    #[serde(default = "d_horizon")]
    pub horizon_end_year: i32,
    #[serde(default = "d_life")]
    pub financing_life_years: u32,
}

impl Default for PolicySchedules {
    fn default() -> Self {
        PolicySchedules {
            emissions_cap_by_year: None,
            rps_fraction_by_year: ByYear::Constant(0.0),
            prm_requirement_by_year: ByYear::Constant(0.0),
            discount_rate: d_rate(),
            base_year: None,
            horizon_end_year: d_horizon(),
            financing_life_years: d_life(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Facet {
    pub intercept: f64,
    #[serde(default)]
    pub slope_wind: f64,
    #[serde(default)]
    pub slope_solar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageFacet {
    pub intercept: f64,
    pub slope: f64,
}

fn d_four() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElccSurface {
    pub facets: ByYear<Vec<Facet>>,
    pub storage_facets: ByYear<Vec<StorageFacet>>,
    #[serde(default = "d_four")]
    pub four_hour_divisor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMultipliers {
    Zero,
    LpDual,
}

fn d_zeta() -> f64 {
    0.5
}
fn d_growth() -> f64 {
    1.2
}
fn d_iters() -> usize {
    60
}
fn d_conv() -> f64 {
    1e-4
}
fn d_window() -> usize {
    5
}
fn d_free() -> f64 {
    0.25
}
fn d_lpdual() -> InitialMultipliers {
    InitialMultipliers::LpDual
}
fn d_group() -> usize {
    1
}
fn d_travel() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlblrConfig {
    #[serde(default = "d_zeta")]
    pub zeta: f64,
    /// Thermal units per subproblem group.
    #[serde(default = "d_group")]
    pub group_size: usize,
    /// Penalty weight used once the first full sweep completes.
    #[serde(default)]
    pub l1_penalty_initial: f64,
    #[serde(default = "d_growth")]
    pub l1_penalty_growth: f64,
    #[serde(default)]
    pub l1_penalty_max: f64,
    /// MW; defaults to 10% of the largest single-resource capacity.
    #[serde(default)]
    pub trust_region_delta: Option<f64>,
    #[serde(default = "d_iters")]
    pub max_iterations: usize,
    #[serde(default = "d_conv")]
    pub multiplier_convergence_tol: f64,
    /// Reset when multipliers travel this many times the distance covered
    /// since the last reset without improving the best surrogate dual.
    #[serde(default = "d_travel")]
    pub travel_threshold: f64,
    #[serde(default = "d_half")]
    pub gap_halving_factor: f64,
    #[serde(default = "d_window")]
    pub stability_window: usize,
    #[serde(default = "d_free")]
    pub primal_recovery_free_fraction: f64,
    #[serde(default = "d_lpdual")]
    pub initial_multipliers: InitialMultipliers,
}

impl Default for SlblrConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn d_target() -> usize {
    8
}
fn d_bins() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerFeature {
    pub id: String,
    pub series: Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Year whose full set of candidate weeks is sampled.
    pub year: i32,
    #[serde(default = "d_target")]
    pub target_count: usize,
    #[serde(default = "d_bins")]
    pub bins: usize,
    pub features: Vec<SamplerFeature>,
    #[serde(default)]
    pub time_limit_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub time: TimeGrid,
    #[serde(default)]
    pub policy: PolicySchedules,
    pub zones: Vec<Zone>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub thermal: Vec<ThermalUnit>,
    #[serde(default)]
    pub renewables: Vec<RenewableResource>,
    #[serde(default)]
    pub hydro: Vec<HydroResource>,
    #[serde(default)]
    pub storage: Vec<StorageResource>,
    pub elcc: ElccSurface,
    #[serde(default)]
    pub slblr: SlblrConfig,
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    /// JSON pointer into the manifest.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("scenario has {} validation error(s):\n{}", .0.len(), .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ValidationIssue>),
}

impl ScenarioConfig {
    pub fn base_year(&self) -> i32 {
        self.policy
            .base_year
            .unwrap_or_else(|| self.time.years.first().copied().unwrap_or(0))
    }

    pub fn policy_zone(&self) -> Option<&Zone> {
        self.zones.iter().find(|z| z.is_policy_zone)
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    pub fn week_ids(&self) -> Vec<u32> {
        self.time.weeks.iter().map(|w| w.week_id).collect()
    }

    /// Reads every CSV series referenced by the manifest.
    pub fn load_series(&mut self, base: &Path) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        let mut load = |s: &mut Series, path: String| {
            if let Err(e) = s.load(base) {
                issues.push(ValidationIssue { path, message: e });
            }
        };
        for (i, z) in self.zones.iter_mut().enumerate() {
            load(&mut z.load, format!("/zones/{i}/load"));
            if let Some(s) = z.reserves.load_following_up.as_mut() {
                load(s, format!("/zones/{i}/reserves/load_following_up"));
            }
            if let Some(s) = z.reserves.load_following_down.as_mut() {
                load(s, format!("/zones/{i}/reserves/load_following_down"));
            }
        }
        for (i, r) in self.renewables.iter_mut().enumerate() {
            load(&mut r.production_factor, format!("/renewables/{i}/production_factor"));
        }
        if let Some(sc) = self.sampler.as_mut() {
            for (i, f) in sc.features.iter_mut().enumerate() {
                load(&mut f.series, format!("/sampler/features/{i}/series"));
            }
        }
        issues
    }

    /// Checks every invariant and data-coverage rule, collecting all issues.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut v = Validator::default();
        v.check(self);
        v.issues
    }
}

#[derive(Default)]
struct Validator {
    issues: Vec<ValidationIssue>,
}

impl Validator {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn nonneg(&mut self, path: String, id: &str, name: &str, v: f64) {
        if !(v >= 0.0) || !v.is_finite() {
            self.err(format!("{path}/{name}"), format!("`{id}`: {name} must be finite and >= 0, got {v}"));
        }
    }

    fn frac(&mut self, path: String, id: &str, name: &str, v: f64) {
        if !(0.0..=1.0).contains(&v) {
            self.err(format!("{path}/{name}"), format!("`{id}`: {name} must lie in [0, 1], got {v}"));
        }
    }

    fn by_year(&mut self, path: String, id: &str, name: &str, b: &ByYear<f64>, years: &[i32], nonneg: bool) {
        for &y in years {
            match b.get(y) {
                None => self.err(format!("{path}/{name}"), format!("`{id}`: no value for year {y}")),
                Some(&v) if nonneg && (!(v >= 0.0) || !v.is_finite()) => {
                    self.err(format!("{path}/{name}/{y}"), format!("`{id}`: {name} must be >= 0, got {v}"))
                }
                _ => {}
            }
        }
    }

    fn coverage(&mut self, path: String, what: &str, s: &Series, cfg: &ScenarioConfig, range: Option<(f64, f64)>) {
        if !s.is_loaded() {
            self.err(path, format!("{what}: series was not loaded"));
            return;
        }
        for &y in &cfg.time.years {
            for w in &cfg.time.weeks {
                let missing: Vec<usize> = cfg
                    .time
                    .hours()
                    .filter(|&t| s.get(y, w.week_id, t).is_none())
                    .collect();
                if missing.len() == cfg.time.hours_per_week {
                    self.err(
                        path.clone(),
                        format!("data gap: {what} has no data for year {y}, week {}", w.week_id),
                    );
                } else if let Some(&t) = missing.first() {
                    self.err(
                        path.clone(),
                        format!(
                            "data gap: {what} is missing year {y}, week {}, hour {t} ({} hours missing)",
                            w.week_id,
                            missing.len()
                        ),
                    );
                }
                if let Some((lo, hi)) = range {
                    for t in cfg.time.hours() {
                        if let Some(x) = s.get(y, w.week_id, t) {
                            if !(x >= lo && x <= hi) {
                                self.err(
                                    path.clone(),
                                    format!("{what}: value {x} at year {y}, week {}, hour {t} outside [{lo}, {hi}]", w.week_id),
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    fn check(&mut self, cfg: &ScenarioConfig) {
        let grid = &cfg.time;
        let years = &grid.years;
        if grid.hours_per_week < 2 {
            self.err("/time/hours_per_week", format!("must be >= 2, got {}", grid.hours_per_week));
        }
        if years.is_empty() {
            self.err("/time/years", "at least one modeled year is required");
        }
        if years.windows(2).any(|w| w[0] >= w[1]) {
            self.err("/time/years", "years must be strictly increasing");
        }
        if grid.weeks.is_empty() {
            self.err("/time/weeks", "at least one week sample is required");
        }
        let mut ids = BTreeSet::new();
        for (i, w) in grid.weeks.iter().enumerate() {
            if !(w.weight > 0.0) {
                self.err(format!("/time/weeks/{i}/weight"), format!("week {} weight must be > 0", w.week_id));
            }
            if !(1..=52).contains(&w.source_week_of_year) {
                self.err(format!("/time/weeks/{i}/source_week_of_year"), "must be in 1..=52");
            }
            if !ids.insert(w.week_id) {
                self.err(format!("/time/weeks/{i}/week_id"), format!("duplicate week id {}", w.week_id));
            }
        }
        if !grid.weeks.is_empty() && (grid.total_weight() - 52.0).abs() > 1e-9 {
            self.err("/time/weeks", format!("week weights must sum to 52, got {}", grid.total_weight()));
        }

        let p = &cfg.policy;
        if !(p.discount_rate >= 0.0) {
            self.err("/policy/discount_rate", "must be >= 0");
        }
        if let Some(&last) = years.last() {
            if p.horizon_end_year < last {
                self.err("/policy/horizon_end_year", "must not precede the last modeled year");
            }
            if cfg.base_year() > years[0] {
                self.err("/policy/base_year", "must not follow the first modeled year");
            }
        }
        if p.financing_life_years == 0 {
            self.err("/policy/financing_life_years", "must be >= 1");
        }
        if let Some(e) = &p.emissions_cap_by_year {
            self.by_year("/policy".into(), "policy", "emissions_cap_by_year", e, years, true);
        }
        self.by_year("/policy".into(), "policy", "prm_requirement_by_year", &p.prm_requirement_by_year, years, true);
        for &y in years {
            match p.rps_fraction_by_year.get(y) {
                Some(&f) if (0.0..=1.0).contains(&f) => {}
                Some(&f) => self.err(format!("/policy/rps_fraction_by_year/{y}"), format!("must lie in [0, 1], got {f}")),
                None => self.err("/policy/rps_fraction_by_year", format!("no value for year {y}")),
            }
        }

        let mut zone_ids = HashMap::new();
        for (i, z) in cfg.zones.iter().enumerate() {
            if zone_ids.insert(z.id.clone(), i).is_some() {
                self.err(format!("/zones/{i}/id"), format!("duplicate zone id `{}`", z.id));
            }
            let path = format!("/zones/{i}");
            self.coverage(format!("{path}/load"), &format!("load of zone `{}`", z.id), &z.load, cfg, Some((0.0, f64::INFINITY)));
            let r = &z.reserves;
            self.nonneg(format!("{path}/reserves"), &z.id, "freq_response_mw", r.freq_response_mw);
            self.frac(format!("{path}/reserves"), &z.id, "freq_response_min_battery_gas_fraction", r.freq_response_min_battery_gas_fraction);
            self.frac(format!("{path}/reserves"), &z.id, "regulation_up_fraction_of_load", r.regulation_up_fraction_of_load);
            self.frac(format!("{path}/reserves"), &z.id, "regulation_down_fraction_of_load", r.regulation_down_fraction_of_load);
            self.frac(format!("{path}/reserves"), &z.id, "spin_fraction_of_load", r.spin_fraction_of_load);
            if z.is_policy_zone {
                for (name, s) in [("load_following_up", &r.load_following_up), ("load_following_down", &r.load_following_down)] {
                    match s {
                        None => self.err(
                            format!("{path}/reserves/{name}"),
                            format!("data gap: missing {name} series for policy zone `{}`", z.id),
                        ),
                        Some(s) => self.coverage(
                            format!("{path}/reserves/{name}"),
                            &format!("{name} of zone `{}`", z.id),
                            s,
                            cfg,
                            Some((0.0, f64::INFINITY)),
                        ),
                    }
                }
            }
        }
        let policy_count = cfg.zones.iter().filter(|z| z.is_policy_zone).count();
        if policy_count != 1 {
            self.err("/zones", format!("exactly one zone must be the policy zone, found {policy_count}"));
        }
        let policy_zone = cfg.policy_zone().map(|z| z.id.clone());

        let mut resource_ids: HashMap<String, String> = HashMap::new();
        let mut unique = |v: &mut Validator, id: &str, path: String| {
            if let Some(prev) = resource_ids.insert(id.to_string(), path.clone()) {
                v.err(format!("{path}/id"), format!("resource id `{id}` already used at {prev}"));
            }
        };
        let zone_ok = |v: &mut Validator, path: &str, id: &str, zone: &str| {
            if !zone_ids.contains_key(zone) {
                v.err(format!("{path}/zone_id"), format!("`{id}` references unknown zone `{zone}`"));
            }
        };

        for (i, l) in cfg.lines.iter().enumerate() {
            let path = format!("/lines/{i}");
            unique(self, &l.id, path.clone());
            for (f, z) in [("from_zone", &l.from_zone), ("to_zone", &l.to_zone)] {
                if !zone_ids.contains_key(z) {
                    self.err(format!("{path}/{f}"), format!("line `{}` references unknown zone `{z}`", l.id));
                }
            }
            if l.from_zone == l.to_zone {
                self.err(format!("{path}/to_zone"), format!("line `{}` connects zone `{}` to itself", l.id, l.from_zone));
            }
            if !(l.flow_min <= 0.0 && 0.0 <= l.flow_max) {
                self.err(path.clone(), format!("line `{}`: need flow_min <= 0 <= flow_max", l.id));
            }
            self.nonneg(path.clone(), &l.id, "wheeling_cost", l.wheeling_cost);
            self.nonneg(path, &l.id, "import_emissions_rate", l.import_emissions_rate);
        }

        for (i, u) in cfg.thermal.iter().enumerate() {
            let path = format!("/thermal/{i}");
            unique(self, &u.id, path.clone());
            zone_ok(self, &path, &u.id, &u.zone_id);
            if !(0.0 <= u.p_min && u.p_min <= u.p_max) {
                self.err(path.clone(), format!("`{}`: need 0 <= p_min <= p_max", u.id));
            }
            if u.min_uptime < 1 || u.min_downtime < 1 {
                self.err(path.clone(), format!("`{}`: min_uptime and min_downtime must be >= 1", u.id));
            }
            if u.min_uptime > grid.hours_per_week || u.min_downtime > grid.hours_per_week {
                self.err(
                    path.clone(),
                    format!("`{}`: minimum up/down time exceeds the {}-hour circular week", u.id, grid.hours_per_week),
                );
            }
            if u.startup_limit < u.p_min {
                self.err(format!("{path}/startup_limit"), format!("`{}`: startup_limit must be >= p_min", u.id));
            }
            if u.shutdown_limit < u.p_min {
                self.err(format!("{path}/shutdown_limit"), format!("`{}`: shutdown_limit must be >= p_min", u.id));
            }
            for (n, x) in [
                ("ramp_up", u.ramp_up),
                ("ramp_down", u.ramp_down),
                ("startup_cost", u.startup_cost),
                ("shutdown_cost", u.shutdown_cost),
                ("gen_cost_slope", u.gen_cost_slope),
                ("gen_cost_intercept", u.gen_cost_intercept),
                ("emissions_rate", u.emissions_rate),
                ("maintenance_cost", u.maintenance_cost),
                ("ten_minute_ramp", u.ten_minute_ramp),
            ] {
                self.nonneg(path.clone(), &u.id, n, x);
            }
            self.frac(path.clone(), &u.id, "nqc_fraction", u.nqc_fraction);
            self.frac(path.clone(), &u.id, "freq_response_fraction", u.freq_response_fraction);
            self.by_year(path.clone(), &u.id, "planned_status_by_year", &u.planned_status_by_year, years, true);
            for &y in years {
                if let Some(&s) = u.planned_status_by_year.get(y) {
                    if s != 0.0 && s != 1.0 {
                        self.err(
                            format!("{path}/planned_status_by_year/{y}"),
                            format!("`{}`: planned status must be 0 or 1, got {s}", u.id),
                        );
                    }
                    if u.retirable && s != 1.0 {
                        self.err(
                            format!("{path}/planned_status_by_year/{y}"),
                            format!("`{}`: a retirable unit must be planned operational in every modeled year", u.id),
                        );
                    }
                }
            }
            if u.buildable {
                self.by_year(path.clone(), &u.id, "capital_cost_by_year", &u.capital_cost_by_year, years, true);
            }
            if (u.buildable || u.retirable) && Some(&u.zone_id) != policy_zone.as_ref() {
                self.err(path.clone(), format!("`{}`: investment decisions are only allowed in the policy zone", u.id));
            }
        }

        for (i, r) in cfg.renewables.iter().enumerate() {
            let path = format!("/renewables/{i}");
            unique(self, &r.id, path.clone());
            zone_ok(self, &path, &r.id, &r.zone_id);
            self.coverage(
                format!("{path}/production_factor"),
                &format!("production factor of `{}`", r.id),
                &r.production_factor,
                cfg,
                Some((0.0, 1.0)),
            );
            self.nonneg(path.clone(), &r.id, "curtailment_cost", r.curtailment_cost);
            self.nonneg(path.clone(), &r.id, "buildable_limit", r.buildable_limit);
            self.nonneg(path.clone(), &r.id, "maintenance_cost", r.maintenance_cost);
            self.by_year(path.clone(), &r.id, "planned_capacity_by_year", &r.planned_capacity_by_year, years, true);
            self.by_year(path.clone(), &r.id, "elcc_axis_multiplier_by_year", &r.elcc_axis_multiplier_by_year, years, true);
            if r.buildable_limit > 0.0 {
                self.by_year(path.clone(), &r.id, "capital_cost_by_year", &r.capital_cost_by_year, years, true);
            }
            if (r.buildable_limit > 0.0 || r.retirable) && Some(&r.zone_id) != policy_zone.as_ref() {
                self.err(path.clone(), format!("`{}`: investment decisions are only allowed in the policy zone", r.id));
            }
        }

        for (i, h) in cfg.hydro.iter().enumerate() {
            let path = format!("/hydro/{i}");
            unique(self, &h.id, path.clone());
            zone_ok(self, &path, &h.id, &h.zone_id);
            if !(0.0 <= h.p_min && h.p_min <= h.p_max) {
                self.err(path.clone(), format!("`{}`: need 0 <= p_min <= p_max", h.id));
            }
            self.nonneg(path.clone(), &h.id, "ramp_limit", h.ramp_limit);
            self.nonneg(path.clone(), &h.id, "maintenance_cost", h.maintenance_cost);
            self.frac(path.clone(), &h.id, "nqc_fraction", h.nqc_fraction);
            for &y in years {
                for w in &grid.weeks {
                    match h.weekly_energy_budget.get(y, w.week_id) {
                        None => self.err(
                            format!("{path}/weekly_energy_budget"),
                            format!("data gap: `{}` has no energy budget for year {y}, week {}", h.id, w.week_id),
                        ),
                        Some(b) if b + 1e-9 < h.p_min * grid.hours_per_week as f64 => self.err(
                            format!("{path}/weekly_energy_budget"),
                            format!(
                                "`{}`: budget {b} MWh for year {y}, week {} is below p_min over the week",
                                h.id, w.week_id
                            ),
                        ),
                        _ => {}
                    }
                }
            }
        }

        for (i, s) in cfg.storage.iter().enumerate() {
            let path = format!("/storage/{i}");
            unique(self, &s.id, path.clone());
            zone_ok(self, &path, &s.id, &s.zone_id);
            if !(0.0 <= s.soc_min_fraction && s.soc_min_fraction < s.soc_max_fraction && s.soc_max_fraction <= 1.0) {
                self.err(
                    format!("{path}/soc_min_fraction"),
                    format!(
                        "storage `{}`: need 0 <= soc_min_fraction < soc_max_fraction <= 1, got {} and {}",
                        s.id, s.soc_min_fraction, s.soc_max_fraction
                    ),
                );
            }
            for (n, e) in [("charge_efficiency", s.charge_efficiency), ("discharge_efficiency", s.discharge_efficiency)] {
                if !(e > 0.0 && e <= 1.0) {
                    self.err(format!("{path}/{n}"), format!("storage `{}`: {n} must lie in (0, 1]", s.id));
                }
            }
            if !(0.0..1.0).contains(&s.self_discharge) {
                self.err(format!("{path}/self_discharge"), format!("storage `{}`: self_discharge must lie in [0, 1)", s.id));
            }
            for (n, x) in [
                ("charge_rate_per_mw", s.charge_rate_per_mw),
                ("discharge_rate_per_mw", s.discharge_rate_per_mw),
                ("maintenance_cost_power", s.maintenance_cost_power),
                ("maintenance_cost_energy", s.maintenance_cost_energy),
                ("buildable_power_limit", s.buildable_power_limit),
                ("buildable_energy_limit", s.buildable_energy_limit),
            ] {
                self.nonneg(path.clone(), &s.id, n, x);
            }
            self.by_year(path.clone(), &s.id, "planned_power_by_year", &s.planned_power_by_year, years, true);
            self.by_year(path.clone(), &s.id, "planned_energy_by_year", &s.planned_energy_by_year, years, true);
            self.by_year(path.clone(), &s.id, "elcc_multiplier_by_year", &s.elcc_multiplier_by_year, years, true);
            if s.buildable_power_limit > 0.0 {
                self.by_year(path.clone(), &s.id, "capital_cost_power_by_year", &s.capital_cost_power_by_year, years, true);
            }
            if s.buildable_energy_limit > 0.0 {
                self.by_year(path.clone(), &s.id, "capital_cost_energy_by_year", &s.capital_cost_energy_by_year, years, true);
            }
            if (s.buildable_power_limit > 0.0 || s.buildable_energy_limit > 0.0 || s.retirable)
                && Some(&s.zone_id) != policy_zone.as_ref()
            {
                self.err(path.clone(), format!("`{}`: investment decisions are only allowed in the policy zone", s.id));
            }
        }

        for &y in years {
            match cfg.elcc.facets.get(y) {
                None => self.err("/elcc/facets", format!("no facets for year {y}")),
                Some(f) if f.is_empty() => self.err("/elcc/facets", format!("empty facet list for year {y}")),
                Some(f) => {
                    for (j, fa) in f.iter().enumerate() {
                        if !(0.0..=1.0).contains(&fa.slope_wind) || !(0.0..=1.0).contains(&fa.slope_solar) {
                            self.err(format!("/elcc/facets/{y}/{j}"), "slopes must lie in [0, 1]");
                        }
                    }
                }
            }
            match cfg.elcc.storage_facets.get(y) {
                None => self.err("/elcc/storage_facets", format!("no storage facets for year {y}")),
                Some(f) if f.is_empty() => self.err("/elcc/storage_facets", format!("empty facet list for year {y}")),
                Some(f) => {
                    for (j, fa) in f.iter().enumerate() {
                        if !(0.0..=1.0).contains(&fa.slope) {
                            self.err(format!("/elcc/storage_facets/{y}/{j}"), "slope must lie in [0, 1]");
                        }
                    }
                }
            }
        }
        if !(cfg.elcc.four_hour_divisor > 0.0) {
            self.err("/elcc/four_hour_divisor", "must be > 0");
        }

        let s = &cfg.slblr;
        if !(s.zeta > 0.0 && s.zeta <= 1.0) {
            self.err("/slblr/zeta", "must lie in (0, 1]");
        }
        if s.group_size < 1 {
            self.err("/slblr/group_size", "must be >= 1");
        }
        if !(s.l1_penalty_initial >= 0.0 && s.l1_penalty_max >= 0.0 && s.l1_penalty_growth >= 1.0) {
            self.err("/slblr", "penalty settings must be nonnegative with growth >= 1");
        }
        if let Some(d) = s.trust_region_delta {
            if !(d > 0.0) {
                self.err("/slblr/trust_region_delta", "must be > 0");
            }
        }
        if !(s.gap_halving_factor > 0.0 && s.gap_halving_factor < 1.0) {
            self.err("/slblr/gap_halving_factor", "must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&s.primal_recovery_free_fraction) {
            self.err("/slblr/primal_recovery_free_fraction", "must lie in [0, 1]");
        }
        if s.stability_window < 1 {
            self.err("/slblr/stability_window", "must be >= 1");
        }

        if let Some(sc) = &cfg.sampler {
            if sc.target_count == 0 {
                self.err("/sampler/target_count", "must be >= 1");
            }
            if sc.bins == 0 {
                self.err("/sampler/bins", "must be >= 1");
            }
            if sc.features.is_empty() {
                self.err("/sampler/features", "at least one feature is required");
            }
        }
    }
}

/// Resolves a scenario argument: a manifest file, a directory holding
/// `scenario.json`, or the name of a bundled fixture.
pub fn resolve_scenario_path(arg: &str) -> PathBuf {
    let p = PathBuf::from(arg);
    if p.is_file() {
        return p;
    }
    if p.is_dir() {
        return p.join("scenario.json");
    }
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(arg).join("scenario.json");
    if bundled.is_file() {
        return bundled;
    }
    p
}

/// Reads, loads series for, and validates a scenario manifest.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = resolve_scenario_path(&path.as_ref().to_string_lossy());
    let text = std::fs::read_to_string(&path).map_err(|source| ScenarioError::Io {
        path: path.clone(),
        source,
    })?;
    let mut cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|source| ScenarioError::Json {
        path: path.clone(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut issues = cfg.load_series(&base);
    issues.extend(cfg.validate());
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ScenarioError::Invalid(issues))
    }
}
