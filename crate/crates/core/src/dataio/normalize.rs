use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::table::TimeSeriesTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    /// `max == min` on the fitting rows; such a column maps to 0.
    pub constant: bool,
}

impl ColumnRange {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if self.constant {
            0.0
        } else {
            ((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        if self.constant {
            self.min
        } else {
            self.min + z * (self.max - self.min)
        }
    }
}

/// Per-column min/max scaling to [0, 1], fitted on a training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub fit_rows: Range<usize>,
    pub columns: Vec<ColumnRange>,
}

pub fn fit_normalizer(table: &TimeSeriesTable, fit_rows: Range<usize>) -> Result<NormalizationParams> {
    if fit_rows.is_empty() || fit_rows.end > table.len() {
        return Err(Error::config(format!(
            "normalizer fit rows {fit_rows:?} invalid for {} rows",
            table.len()
        )));
    }
    let columns = table
        .names()
        .iter()
        .zip(table.columns())
        .map(|(name, col)| {
            let window = &col[fit_rows.clone()];
            let min = window.iter().copied().fold(f64::INFINITY, f64::min);
            let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ColumnRange {
                name: name.clone(),
                min,
                max,
                constant: max == min,
            }
        })
        .collect();
    Ok(NormalizationParams { fit_rows, columns })
}

impl NormalizationParams {
    pub fn column(&self, name: &str) -> Result<&ColumnRange> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::schema(format!("normalizer has no column {name}")))
    }

    pub fn constant_columns(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.constant)
            .map(|c| c.name.as_str())
            .collect()
    }

    fn map(&self, table: &TimeSeriesTable, f: impl Fn(&ColumnRange, f64) -> f64) -> Result<TimeSeriesTable> {
        let columns = table
            .names()
            .iter()
            .zip(table.columns())
            .map(|(name, col)| {
                let range = self.column(name)?;
                Ok(col.iter().map(|&x| f(range, x)).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        TimeSeriesTable::new(
            table.granularity(),
            table.stamps().to_vec(),
            table.names().to_vec(),
            columns,
        )
    }

    /// `(x - min) / (max - min)` clipped to [0, 1].
    pub fn apply(&self, table: &TimeSeriesTable) -> Result<TimeSeriesTable> {
        self.map(table, ColumnRange::apply)
    }

    pub fn invert(&self, table: &TimeSeriesTable) -> Result<TimeSeriesTable> {
        self.map(table, ColumnRange::invert)
    }
}

pub fn apply_normalizer(table: &TimeSeriesTable, params: &NormalizationParams) -> Result<TimeSeriesTable> {
    params.apply(table)
}

pub fn invert_normalizer(table: &TimeSeriesTable, params: &NormalizationParams) -> Result<TimeSeriesTable> {
    params.invert(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::table::{Granularity, Stamp};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn table(cols: Vec<(&str, Vec<f64>)>) -> TimeSeriesTable {
        let n = cols[0].1.len();
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        TimeSeriesTable::new(
            Granularity::Daily,
            (0..n).map(|i| Stamp::day(d0 + chrono::Days::new(i as u64))).collect(),
            cols.iter().map(|c| c.0.to_string()).collect(),
            cols.into_iter().map(|c| c.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn full_range() {
        let p = fit_normalizer(&table(vec![("a", vec![0.0, 5.0, 10.0])]), 0..3).unwrap();
        assert_eq!((p.columns[0].min, p.columns[0].max), (0.0, 10.0));
        assert_eq!(p.columns[0].apply(5.0), 0.5);
    }

    #[test]
    fn leakage_guard() {
        let p = fit_normalizer(&table(vec![("a", vec![0.0, 5.0, 10.0])]), 0..2).unwrap();
        assert_eq!((p.columns[0].min, p.columns[0].max), (0.0, 5.0));
    }

    #[test]
    fn constant_flagged() {
        let t = table(vec![("a", vec![3.0, 3.0, 3.0])]);
        let p = fit_normalizer(&t, 0..3).unwrap();
        assert_eq!(p.constant_columns(), vec!["a"]);
        assert_eq!(p.apply(&t).unwrap().columns()[0], vec![0.0; 3]);
    }

    #[test]
    fn out_of_window_clipped() {
        let p = fit_normalizer(&table(vec![("a", vec![0.0, 10.0])]), 0..2).unwrap();
        assert_eq!(p.columns[0].apply(12.0), 1.0);
        assert_eq!(p.columns[0].apply(-3.0), 0.0);
    }

    #[test]
    fn unknown_column() {
        let p = fit_normalizer(&table(vec![("a", vec![0.0, 10.0])]), 0..2).unwrap();
        assert!(matches!(p.apply(&table(vec![("b", vec![1.0])])), Err(Error::Schema(_))));
    }

    #[test]
    fn future_rows_do_not_move_params() {
        let mut vals: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let before = fit_normalizer(&table(vec![("a", vals.clone())]), 0..12).unwrap();
        for v in vals.iter_mut().skip(12) {
            *v = 1e6;
        }
        let after = fit_normalizer(&table(vec![("a", vals)]), 0..12).unwrap();
        assert_eq!(before, after);
    }

    proptest! {
        #[test]
        fn round_trip(xs in proptest::collection::vec(-1e3f64..1e3, 2..30)) {
            let t = table(vec![("a", xs.clone())]);
            let p = fit_normalizer(&t, 0..xs.len()).unwrap();
            let back = p.invert(&p.apply(&t).unwrap()).unwrap();
            if !p.columns[0].constant {
                for (a, b) in xs.iter().zip(&back.columns()[0]) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
