//! Hourly series keyed by (year, week id, hour).
//!
//! In a manifest a series is either a CSV path (columns `year, week, hour,
//! value`, path relative to the manifest) or an inline constant
//! `{"constant": x}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

pub type SeriesKey = (i32, u32, usize);

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesSource {
    File(String),
    Constant(f64),
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub source: SeriesSource,
    values: BTreeMap<SeriesKey, f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
struct CsvRow {
    year: i32,
    week: u32,
    hour: usize,
    value: f64,
}

impl Series {
    pub fn constant(v: f64) -> Self {
        Series {
            source: SeriesSource::Constant(v),
            values: BTreeMap::new(),
        }
    }

    pub fn file(path: impl Into<String>) -> Self {
        Series {
            source: SeriesSource::File(path.into()),
            values: BTreeMap::new(),
        }
    }

    pub fn from_table(values: BTreeMap<SeriesKey, f64>) -> Self {
        Series {
            source: SeriesSource::Table,
            values,
        }
    }

    /// Builds a table from a function of (year, week id, hour).
    pub fn from_fn(
        years: &[i32],
        weeks: &[u32],
        hours: usize,
        f: impl Fn(i32, u32, usize) -> f64,
    ) -> Self {
        let mut values = BTreeMap::new();
        for &y in years {
            for &w in weeks {
                for t in 0..hours {
                    values.insert((y, w, t), f(y, w, t));
                }
            }
        }
        Series::from_table(values)
    }

    pub fn get(&self, year: i32, week: u32, hour: usize) -> Option<f64> {
        match self.source {
            SeriesSource::Constant(v) => Some(v),
            _ => self.values.get(&(year, week, hour)).copied(),
        }
    }

    pub fn values(&self) -> &BTreeMap<SeriesKey, f64> {
        &self.values
    }

    pub fn is_loaded(&self) -> bool {
        !matches!(self.source, SeriesSource::File(_)) || !self.values.is_empty()
    }

    /// Reads the CSV named by a `File` source, resolving relative paths against `base`.
    pub fn load(&mut self, base: &Path) -> Result<(), String> {
        let SeriesSource::File(name) = &self.source else {
            return Ok(());
        };
        let path = base.join(name);
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(&path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut values = BTreeMap::new();
        for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| format!("{} record {}: {e}", path.display(), i + 1))?;
            if values.insert((row.year, row.week, row.hour), row.value).is_some() {
                return Err(format!(
                    "{}: duplicate entry for year {}, week {}, hour {}",
                    path.display(),
                    row.year,
                    row.week,
                    row.hour
                ));
            }
        }
        self.values = values;
        Ok(())
    }

    /// Writes `values` as a series CSV.
    pub fn write_csv(values: &BTreeMap<SeriesKey, f64>, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        for (&(year, week, hour), &value) in values {
            w.serialize(CsvRow {
                year,
                week,
                hour,
                value,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum SeriesRepr {
    File(String),
    Constant { constant: f64 },
}

impl<'de> Deserialize<'de> for Series {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match SeriesRepr::deserialize(d) {
            Ok(SeriesRepr::File(f)) => Ok(Series::file(f)),
            Ok(SeriesRepr::Constant { constant }) => Ok(Series::constant(constant)),
            Err(_) => Err(de::Error::custom(
                "expected a CSV path or {\"constant\": number}",
            )),
        }
    }
}

impl Serialize for Series {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.source {
            SeriesSource::File(f) => SeriesRepr::File(f.clone()).serialize(s),
            SeriesSource::Constant(c) => SeriesRepr::Constant { constant: *c }.serialize(s),
            SeriesSource::Table => Err(serde::ser::Error::custom("in-memory series has no manifest form")),
        }
    }
}
