//! Chronological 80-10-10 division, the walk-forward fold schedule, and
//! fixed-length input windows.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dataio::{TimeSeriesTable, N_FEATURES};
use crate::error::{Error, Result};
use crate::featsel::FeatureMask;
use crate::numkernel::Matrix;

pub const DEFAULT_WINDOW: usize = 14;
const MIN_ROWS: usize = 50;

mod range_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::ops::Range;

    pub fn serialize<S: Serializer>(r: &Range<usize>, s: S) -> Result<S::Ok, S::Error> {
        [r.start, r.end].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Range<usize>, D::Error> {
        let [lo, hi] = <[usize; 2]>::deserialize(d)?;
        Ok(lo..hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Division {
    #[serde(with = "range_pair")]
    pub train: Range<usize>,
    #[serde(with = "range_pair", rename = "val")]
    pub validation: Range<usize>,
    #[serde(with = "range_pair")]
    pub test: Range<usize>,
}

/// One walk-forward step. All ranges are half-open row indices.
pub type Fold = Division;

impl Division {
    /// Rows available for fitting anything in this fold (everything before
    /// the test block).
    pub fn history(&self) -> Range<usize> {
        0..self.test.start
    }
}

pub fn initial_division(n_rows: usize) -> Result<Division> {
    if n_rows < MIN_ROWS {
        return Err(Error::config(format!(
            "{n_rows} rows is too few for an 80-10-10 division (need {MIN_ROWS})"
        )));
    }
    let train = n_rows * 8 / 10;
    let val = n_rows / 10;
    Ok(Division {
        train: 0..train,
        validation: train..train + val,
        test: train + val..n_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    /// Union of all test blocks.
    pub fn test_region(&self) -> Range<usize> {
        match (self.folds.first(), self.folds.last()) {
            (Some(a), Some(b)) => a.test.start..b.test.end,
            _ => 0..0,
        }
    }
}

/// Walk-forward schedule anchored on the 80-10-10 division: the first test
/// block starts where the initial test set does, each later block follows the
/// previous one, the validation window is the `val_len` rows right before the
/// test block and the training subset is everything earlier. A final block
/// shorter than `test_len` is kept so that every test row is covered once.
pub fn walk_forward_folds(n_rows: usize, val_len: usize, test_len: usize) -> Result<SplitPlan> {
    if val_len == 0 || test_len == 0 {
        return Err(Error::config("validation and test lengths must be at least 1"));
    }
    let anchor = initial_division(n_rows)?;
    let first_test = anchor.test.start;
    if first_test <= val_len {
        return Err(Error::config(format!(
            "validation length {val_len} leaves no training rows before row {first_test}"
        )));
    }
    let mut folds = Vec::new();
    let mut start = first_test;
    while start < n_rows {
        let end = (start + test_len).min(n_rows);
        folds.push(Fold {
            train: 0..start - val_len,
            validation: start - val_len..start,
            test: start..end,
        });
        start = end;
    }
    Ok(SplitPlan { folds })
}

/// Input windows over masked features with the next-day target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub window: usize,
    pub features: Vec<usize>,
    pub inputs: Vec<Matrix>,
    pub targets: Vec<f64>,
    /// Table row of each sample's target.
    pub target_rows: Vec<usize>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Samples whose target row falls in `rows`.
    pub fn subset(&self, rows: Range<usize>) -> WindowedDataset {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| rows.contains(&self.target_rows[i]))
            .collect();
        WindowedDataset {
            window: self.window,
            features: self.features.clone(),
            inputs: keep.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: keep.iter().map(|&i| self.targets[i]).collect(),
            target_rows: keep.iter().map(|&i| self.target_rows[i]).collect(),
        }
    }
}

/// Sample `t` uses rows `[t - window, t)` of the masked features as input and
/// the target at row `t`.
pub fn windowize(table: &TimeSeriesTable, mask: &FeatureMask, window: usize) -> Result<WindowedDataset> {
    if window == 0 {
        return Err(Error::config("window must be at least 1"));
    }
    if window >= table.len() {
        return Err(Error::config(format!(
            "window {window} needs more than {} rows",
            table.len()
        )));
    }
    windowize_targets(table, mask, window, window..table.len())
}

/// Like [`windowize`] but only for target rows in `targets` (which must all
/// have a full window of history).
pub fn windowize_targets(
    table: &TimeSeriesTable,
    mask: &FeatureMask,
    window: usize,
    targets: Range<usize>,
) -> Result<WindowedDataset> {
    if window == 0 || targets.start < window || targets.end > table.len() {
        return Err(Error::config(format!(
            "target rows {targets:?} incompatible with window {window} on {} rows",
            table.len()
        )));
    }
    let features = mask.indices();
    let full = table.feature_matrix()?;
    debug_assert_eq!(full.cols(), N_FEATURES);
    let y = table.target()?;
    let mut inputs = Vec::with_capacity(targets.len());
    let mut values = Vec::new();
    for t in targets.clone() {
        values.clear();
        for r in t - window..t {
            let row = full.row(r);
            values.extend(features.iter().map(|&j| row[j]));
        }
        inputs.push(Matrix::new(window, features.len(), values.clone())?);
    }
    Ok(WindowedDataset {
        window,
        features,
        inputs,
        targets: targets.clone().map(|t| y[t]).collect(),
        target_rows: targets.collect(),
    })
}
