//! Circular hourly grid over sampled weeks and modeled years.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("period length must be positive, got {0}")]
    NonPositivePeriod(i64),
}

/// Canonical zero-based hour of `t` on a circle of length `period`;
/// negative hours wrap backward from the end.
pub fn tau(t: i64, period: i64) -> Result<usize, GridError> {
    if period <= 0 {
        return Err(GridError::NonPositivePeriod(period));
    }
    Ok(t.rem_euclid(period) as usize)
}

/// `tau` for an already validated period.
pub(crate) fn wrap(t: i64, period: usize) -> usize {
    t.rem_euclid(period as i64) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeekSample {
    pub week_id: u32,
    pub weight: f64,
    pub source_week_of_year: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default = "default_hours")]
    pub hours_per_week: usize,
    pub weeks: Vec<WeekSample>,
    pub years: Vec<i32>,
}

fn default_hours() -> usize {
    168
}

impl TimeGrid {
    pub fn hours(&self) -> std::ops::Range<usize> {
        0..self.hours_per_week
    }

    /// Previous hour on the circle.
    pub fn prev(&self, t: usize) -> usize {
        wrap(t as i64 - 1, self.hours_per_week)
    }

    /// Next hour on the circle.
    pub fn next(&self, t: usize) -> usize {
        wrap(t as i64 + 1, self.hours_per_week)
    }

    pub fn total_weight(&self) -> f64 {
        self.weeks.iter().map(|w| w.weight).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        assert_eq!(tau(5, 168), Ok(5));
        assert_eq!(tau(168, 168), Ok(0));
        assert_eq!(tau(-1, 168), Ok(167));
        assert_eq!(tau(-169, 168), Ok(167));
        assert_eq!(tau(3, 0), Err(GridError::NonPositivePeriod(0)));
        assert_eq!(tau(3, -4), Err(GridError::NonPositivePeriod(-4)));
    }

    #[test]
    fn tau_is_identity_inside_the_period() {
        for t in 0..24 {
            assert_eq!(tau(t, 24).unwrap(), t as usize);
        }
    }
}
