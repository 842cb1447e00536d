use std::ops::Range;

use crate::dataio::{TimeSeriesTable, N_FEATURES};
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// Design matrix over the full catalog with an aligned target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionData {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl SelectionData {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::shape(format!(
                "{} design rows for {} targets",
                x.rows(),
                y.len()
            )));
        }
        Ok(SelectionData { x, y })
    }

    /// Pairs the features of day `t - 1` with the target of day `t`, for
    /// targets in `rows` whose predecessor also lies in `rows`.
    pub fn lagged(table: &TimeSeriesTable, rows: Range<usize>) -> Result<Self> {
        if rows.end > table.len() || rows.len() < 3 {
            return Err(Error::config(format!(
                "selection rows {rows:?} out of a {}-row table",
                table.len()
            )));
        }
        let full = table.feature_matrix()?;
        let y = table.target()?;
        let n = rows.len() - 1;
        let mut values = Vec::with_capacity(n * N_FEATURES);
        for t in rows.start + 1..rows.end {
            values.extend_from_slice(full.row(t - 1));
        }
        SelectionData::new(
            Matrix::new(n, N_FEATURES, values)?,
            y[rows.start + 1..rows.end].to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn rows(&self, range: Range<usize>) -> SelectionData {
        SelectionData {
            x: self.x.slice_rows(range.clone()),
            y: self.y[range].to_vec(),
        }
    }

    /// Chronological split: the first `fraction` of rows, then the rest.
    pub fn split(&self, fraction: f64) -> Result<(SelectionData, SelectionData)> {
        let cut = (self.len() as f64 * fraction).floor() as usize;
        if cut == 0 || cut >= self.len() {
            return Err(Error::config(format!(
                "split fraction {fraction} of {} rows leaves an empty side",
                self.len()
            )));
        }
        Ok((self.rows(0..cut), self.rows(cut..self.len())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_generate, SynthConfig};
    use crate::numkernel::RngState;

    #[test]
    fn lag_alignment() {
        let t = synth_generate(&mut RngState::new(1), 40, &SynthConfig::default())
            .unwrap()
            .table;
        let d = SelectionData::lagged(&t, 5..20).unwrap();
        assert_eq!(d.len(), 14);
        assert_eq!(d.x.row(0), t.feature_matrix().unwrap().row(5));
        assert_eq!(d.y[0], t.target().unwrap()[6]);
        let (a, b) = d.split(0.8).unwrap();
        assert_eq!((a.len(), b.len()), (11, 3));
        assert_eq!(b.y[0], d.y[11]);
    }
}
