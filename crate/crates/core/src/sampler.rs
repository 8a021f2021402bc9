//! Representative-week selection.
//!
//! Each feature's hourly values are binned into equal-width bins. The chosen
//! weeks and weights minimize the L1 distance between the full-year bin
//! frequencies and the weighted average of the chosen weeks' frequencies.

use std::collections::BTreeMap;
use std::time::Duration;

use decarb_milp::{LinExpr, MilpBackend, MixedIntegerModel, ModelError, Sense, SolveError, SolveOptions, SolveStatus, VarId};
use log::warn;
use serde::Serialize;
use thiserror::Error;

use crate::scenario::SamplerConfig;
use crate::series::Series;

/// Total weight of a sampled year.
pub const WEEKS_PER_YEAR: f64 = 52.0;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("feature `{0}` has no data")]
    EmptyFeature(String),
    #[error("feature `{feature}`: week {week} has {found} hours, expected {expected}")]
    RaggedWeek {
        feature: String,
        week: u32,
        found: usize,
        expected: usize,
    },
    #[error("features cover different candidate weeks")]
    WeekMismatch,
    #[error("target_count {target} must be between 1 and the {available} candidate weeks")]
    BadTarget { target: usize, available: usize },
    #[error("bin spec `{0}` is invalid")]
    BadBins(String),
    #[error("backend returned `{0}`")]
    Backend(&'static str),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Hourly values of one feature, grouped by candidate week.
#[derive(Debug, Clone)]
pub struct FeatureWeeks {
    pub id: String,
    pub weeks: BTreeMap<u32, Vec<f64>>,
}

impl FeatureWeeks {
    /// Collects one year of a series into weeks, checking every week has the
    /// same number of hours.
    pub fn from_series(id: &str, series: &Series, year: i32) -> Result<Self, SamplerError> {
        let mut weeks: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for (&(y, w, _), &v) in series.values() {
            if y == year {
                weeks.entry(w).or_default().push(v);
            }
        }
        let fw = FeatureWeeks { id: id.to_string(), weeks };
        fw.check()?;
        Ok(fw)
    }

    fn check(&self) -> Result<(), SamplerError> {
        let expected = self.weeks.values().next().map(Vec::len).unwrap_or(0);
        if expected == 0 {
            return Err(SamplerError::EmptyFeature(self.id.clone()));
        }
        for (&week, v) in &self.weeks {
            if v.len() != expected {
                return Err(SamplerError::RaggedWeek {
                    feature: self.id.clone(),
                    week,
                    found: v.len(),
                    expected,
                });
            }
        }
        Ok(())
    }
}

/// Equal-width bins over `range`, or over the observed range when `None`.
#[derive(Debug, Clone, Copy)]
pub struct BinSpec {
    pub count: usize,
    pub range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bin {
    pub feature: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeekFeatureHistogram {
    pub bins: Vec<Bin>,
    pub weeks: Vec<u32>,
    pub yearly_freq: Vec<f64>,
    /// `weekly_freq[w][b]`, rows in `weeks` order.
    pub weekly_freq: Vec<Vec<f64>>,
}

impl WeekFeatureHistogram {
    /// L1 distance of a weighted week selection, weights summing to 52.
    pub fn distance(&self, weights: &[(usize, f64)]) -> f64 {
        self.yearly_freq
            .iter()
            .enumerate()
            .map(|(b, y)| {
                let s: f64 = weights.iter().map(|&(w, x)| x / WEEKS_PER_YEAR * self.weekly_freq[w][b]).sum();
                (y - s).abs()
            })
            .sum()
    }
}

pub fn featurize_weeks(features: &[FeatureWeeks], spec: &[BinSpec]) -> Result<WeekFeatureHistogram, SamplerError> {
    if features.len() != spec.len() {
        return Err(SamplerError::BadBins(format!("{} specs for {} features", spec.len(), features.len())));
    }
    let weeks: Vec<u32> = match features.first() {
        Some(f) => f.weeks.keys().copied().collect(),
        None => return Err(SamplerError::EmptyFeature(String::new())),
    };
    let mut bins = Vec::new();
    let mut yearly = Vec::new();
    let mut weekly = vec![Vec::new(); weeks.len()];
    for (f, s) in features.iter().zip(spec) {
        f.check()?;
        if f.weeks.keys().copied().collect::<Vec<_>>() != weeks {
            return Err(SamplerError::WeekMismatch);
        }
        if s.count == 0 {
            return Err(SamplerError::BadBins(f.id.clone()));
        }
        let (lo, hi) = match s.range {
            Some(r) => r,
            None => {
                let all = f.weeks.values().flatten();
                let lo = all.clone().fold(f64::INFINITY, |a, &b| a.min(b));
                let hi = all.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                if hi > lo {
                    (lo, hi)
                } else {
                    (lo - 0.5, lo + 0.5)
                }
            }
        };
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(SamplerError::BadBins(f.id.clone()));
        }
        let width = (hi - lo) / s.count as f64;
        for b in 0..s.count {
            bins.push(Bin {
                feature: f.id.clone(),
                lower: lo + width * b as f64,
                upper: if b + 1 == s.count { hi } else { lo + width * (b + 1) as f64 },
            });
        }
        let mut clamped = 0usize;
        let mut bin_of = |v: f64| {
            if v < lo || v > hi {
                clamped += 1;
            }
            (((v - lo) / width).floor().max(0.0) as usize).min(s.count - 1)
        };
        let mut year_counts = vec![0.0; s.count];
        let mut total = 0.0;
        for (i, vals) in f.weeks.values().enumerate() {
            let mut counts = vec![0.0; s.count];
            for &v in vals {
                counts[bin_of(v)] += 1.0;
            }
            let n = vals.len() as f64;
            for (b, c) in counts.iter().enumerate() {
                year_counts[b] += c;
            }
            total += n;
            weekly[i].extend(counts.iter().map(|c| c / n));
        }
        if clamped > 0 {
            warn!("feature `{}`: {clamped} values outside [{lo}, {hi}] clamped to the edge bins", f.id);
        }
        yearly.extend(year_counts.iter().map(|c| c / total));
    }
    Ok(WeekFeatureHistogram {
        bins,
        weeks,
        yearly_freq: yearly,
        weekly_freq: weekly,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingPlan {
    /// (week id, weight) for every picked week, weights summing to 52. A
    /// picked week may carry zero weight when fewer weeks suffice.
    pub weeks: Vec<(u32, f64)>,
    pub target_count: usize,
    pub distance: f64,
    /// False when the backend stopped on a limit with an incumbent.
    pub proven_optimal: bool,
}

/// Selection MILP: `pick_w` binary, `weight_w ∈ [0, 52·pick_w]`,
/// `Σ weight = 52`, `Σ pick = target`, L1 split per bin.
pub fn selection_model(hist: &WeekFeatureHistogram, target_count: usize) -> Result<(MixedIntegerModel, Vec<VarId>, Vec<VarId>), SamplerError> {
    let n = hist.weeks.len();
    if target_count == 0 || target_count > n {
        return Err(SamplerError::BadTarget {
            target: target_count,
            available: n,
        });
    }
    let mut m = MixedIntegerModel::new("week_selection");
    let mut picks = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &w in &hist.weeks {
        let p = m.add_binary(format!("pick[{w}]"))?;
        let x = m.add_continuous(format!("weight[{w}]"), 0.0, WEEKS_PER_YEAR)?;
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(p, -WEEKS_PER_YEAR);
        m.add_row(format!("weight_ub[{w}]"), &e, Sense::Le, 0.0)?;
        picks.push(p);
        weights.push(x);
    }
    let mut total = LinExpr::new();
    let mut count = LinExpr::new();
    for i in 0..n {
        total.add_term(weights[i], 1.0);
        count.add_term(picks[i], 1.0);
    }
    m.add_row("weight_total", &total, Sense::Eq, WEEKS_PER_YEAR)?;
    m.add_row("pick_count", &count, Sense::Eq, target_count as f64)?;
    let mut obj = LinExpr::new();
    for (b, &y) in hist.yearly_freq.iter().enumerate() {
        let ep = m.add_continuous(format!("dev_pos[{b}]"), 0.0, f64::INFINITY)?;
        let em = m.add_continuous(format!("dev_neg[{b}]"), 0.0, f64::INFINITY)?;
        let mut e = LinExpr::new();
        for i in 0..n {
            let f = hist.weekly_freq[i][b];
            if f != 0.0 {
                e.add_term(weights[i], f / WEEKS_PER_YEAR);
            }
        }
        e.add_term(ep, 1.0).add_term(em, -1.0);
        m.add_row(format!("bin[{b}]"), &e, Sense::Eq, y)?;
        obj.add_term(ep, 1.0).add_term(em, 1.0);
    }
    m.add_objective(&obj, 1.0);
    Ok((m, picks, weights))
}

pub fn select_weeks(
    hist: &WeekFeatureHistogram,
    target_count: usize,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<SamplingPlan, SamplerError> {
    let (m, picks, weights) = selection_model(hist, target_count)?;
    let mut opts = options.clone();
    opts.max_binaries = opts.max_binaries.max(picks.len());
    let sol = backend.solve(&m, &opts)?;
    let proven_optimal = match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::Feasible => {
            warn!("week selection stopped before proving optimality");
            false
        }
        SolveStatus::Infeasible => return Err(SamplerError::Backend("infeasible")),
        SolveStatus::Unbounded => return Err(SamplerError::Backend("unbounded")),
        SolveStatus::Limit => return Err(SamplerError::Backend("limit")),
    };
    let mut chosen = Vec::new();
    for i in 0..hist.weeks.len() {
        if sol.values[picks[i].0] > 0.5 {
            chosen.push((i, sol.values[weights[i].0].max(0.0)));
        }
    }
    let sum: f64 = chosen.iter().map(|c| c.1).sum();
    for c in &mut chosen {
        c.1 *= WEEKS_PER_YEAR / sum;
    }
    let distance = hist.distance(&chosen);
    Ok(SamplingPlan {
        weeks: chosen.into_iter().map(|(i, x)| (hist.weeks[i], x)).collect(),
        target_count,
        distance,
        proven_optimal,
    })
}

/// Builds the histogram from a scenario's sampler block.
pub fn featurize_config(cfg: &SamplerConfig) -> Result<WeekFeatureHistogram, SamplerError> {
    let features = cfg
        .features
        .iter()
        .map(|f| FeatureWeeks::from_series(&f.id, &f.series, cfg.year))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = vec![
        BinSpec {
            count: cfg.bins,
            range: None
        };
        features.len()
    ];
    featurize_weeks(&features, &spec)
}

pub fn sample_config(cfg: &SamplerConfig, backend: &dyn MilpBackend) -> Result<(WeekFeatureHistogram, SamplingPlan), SamplerError> {
    let hist = featurize_config(cfg)?;
    let options = SolveOptions {
        time_limit: cfg.time_limit_seconds.map(Duration::from_secs_f64),
        relative_gap_tol: 1e-6,
        ..SolveOptions::default()
    };
    let plan = select_weeks(&hist, cfg.target_count, backend, &options)?;
    Ok((hist, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use decarb_milp::ReferenceBackend;

    fn feature(weeks: Vec<Vec<f64>>) -> FeatureWeeks {
        FeatureWeeks {
            id: "f".into(),
            weeks: weeks.into_iter().enumerate().map(|(i, v)| (i as u32 + 1, v)).collect(),
        }
    }

    #[test]
    fn constant_series_single_bin() {
        let f = feature(vec![vec![3.0; 6]; 4]);
        let h = featurize_weeks(&[f], &[BinSpec { count: 4, range: None }]).unwrap();
        assert_eq!(h.yearly_freq.iter().filter(|&&x| x > 0.0).count(), 1);
        for w in &h.weekly_freq {
            assert_eq!(w, &h.yearly_freq);
        }
    }

    #[test]
    fn two_levels_split_evenly() {
        let f = feature(vec![vec![1.0; 4], vec![1.0; 4], vec![9.0; 4], vec![9.0; 4]]);
        let h = featurize_weeks(&[f], &[BinSpec { count: 2, range: None }]).unwrap();
        assert_eq!(h.yearly_freq, vec![0.5, 0.5]);
    }

    #[test]
    fn out_of_range_values_are_clamped() {
        let f = feature(vec![vec![-5.0, 0.5, 20.0]]);
        let h = featurize_weeks(&[f], &[BinSpec { count: 2, range: Some((0.0, 2.0)) }]).unwrap();
        assert!((h.yearly_freq[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((h.yearly_freq[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_weeks_any_single_week() {
        let f = feature(vec![vec![1.0, 2.0, 3.0]; 6]);
        let h = featurize_weeks(&[f], &[BinSpec { count: 3, range: None }]).unwrap();
        let p = select_weeks(&h, 1, &ReferenceBackend, &SolveOptions::default()).unwrap();
        assert_eq!(p.weeks.len(), 1);
        assert!((p.weeks[0].1 - 52.0).abs() < 1e-9);
        assert!(p.distance < 1e-9);
    }

    #[test]
    fn bad_target_rejected() {
        let f = feature(vec![vec![1.0]; 3]);
        let h = featurize_weeks(&[f], &[BinSpec { count: 1, range: None }]).unwrap();
        assert!(matches!(select_weeks(&h, 0, &ReferenceBackend, &SolveOptions::default()), Err(SamplerError::BadTarget { .. })));
        assert!(matches!(select_weeks(&h, 4, &ReferenceBackend, &SolveOptions::default()), Err(SamplerError::BadTarget { .. })));
    }
}
