use std::fmt;
use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::catalog::{FeatureId, N_FEATURES, TARGET};
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Hourly,
    Daily,
}

/// A date, or a date plus delivery hour 0..=23.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stamp {
    pub date: NaiveDate,
    pub hour: Option<u8>,
}

impl Stamp {
    pub fn day(date: NaiveDate) -> Self {
        Stamp { date, hour: None }
    }

    pub fn hour(date: NaiveDate, hour: u8) -> Self {
        Stamp { date, hour: Some(hour) }
    }
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hour {
            None => write!(f, "{}", self.date.format("%Y-%m-%d")),
            Some(h) => write!(f, "{} {h:02}h", self.date.format("%Y-%m-%d")),
        }
    }
}

/// Dated rows of named real-valued columns. Missing values are NaN until the
/// table is cleaned.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    granularity: Granularity,
    stamps: Vec<Stamp>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeriesTable {
    pub fn new(
        granularity: Granularity,
        stamps: Vec<Stamp>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::shape(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some((name, col)) = names.iter().zip(&columns).find(|(_, c)| c.len() != stamps.len()) {
            return Err(Error::shape(format!(
                "column {name} has {} rows, expected {}",
                col.len(),
                stamps.len()
            )));
        }
        Ok(TimeSeriesTable {
            granularity,
            stamps,
            names,
            columns,
        })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn stamps(&self) -> &[Stamp] {
        &self.stamps
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.column_index(name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::schema(format!("no column named {name}")))
    }

    pub fn column_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        match self.column_index(name) {
            Some(i) => Ok(&mut self.columns[i]),
            None => Err(Error::schema(format!("no column named {name}"))),
        }
    }

    pub fn feature(&self, id: FeatureId) -> Result<&[f64]> {
        self.column(&id.to_string())
    }

    pub fn target(&self) -> Result<&[f64]> {
        self.column(TARGET)
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().flatten().any(|v| v.is_nan())
    }

    /// True when every feature F1..F62 and the target are present.
    pub fn is_full_daily(&self) -> bool {
        self.granularity == Granularity::Daily
            && FeatureId::all().all(|f| self.column_index(&f.to_string()).is_some())
            && self.column_index(TARGET).is_some()
    }

    /// Feature matrix (rows x 62) in catalog order.
    pub fn feature_matrix(&self) -> Result<Matrix> {
        let cols: Vec<&[f64]> = FeatureId::all().map(|f| self.feature(f)).collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.len() * N_FEATURES);
        for t in 0..self.len() {
            values.extend(cols.iter().map(|c| c[t]));
        }
        Matrix::new(self.len(), N_FEATURES, values)
    }

    pub fn slice_rows(&self, range: Range<usize>) -> TimeSeriesTable {
        TimeSeriesTable {
            granularity: self.granularity,
            stamps: self.stamps[range.clone()].to_vec(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[range.clone()].to_vec()).collect(),
        }
    }

    pub(crate) fn into_parts(self) -> (Granularity, Vec<Stamp>, Vec<String>, Vec<Vec<f64>>) {
        (self.granularity, self.stamps, self.names, self.columns)
    }
}
