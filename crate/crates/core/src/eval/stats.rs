use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of one metric over repeated experiments. Percentiles interpolate
/// linearly between closest ranks; `std` uses `n - 1` (0 for one run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl ExperimentStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Degenerate("no experiment values to summarize".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(ExperimentStats {
            count: n,
            mean,
            std,
            min: sorted[0],
            p25: percentile(&sorted, 0.25),
            p50: percentile(&sorted, 0.5),
            p75: percentile(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_to_ten() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = ExperimentStats::from_values(&v).unwrap();
        assert_eq!(s.count, 10);
        assert_eq!(s.mean, 5.5);
        assert_eq!(s.p50, 5.5);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 10.0);
        assert_eq!(s.p25, 3.25);
        assert_eq!(s.p75, 7.75);
        assert!((s.std - (55.0f64 / 6.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_value() {
        let s = ExperimentStats::from_values(&[4.2]).unwrap();
        assert_eq!((s.mean, s.std, s.p25, s.max), (4.2, 0.0, 4.2, 4.2));
    }

    #[test]
    fn empty_rejected() {
        assert!(ExperimentStats::from_values(&[]).is_err());
    }

    proptest! {
        #[test]
        fn ordered(v in prop::collection::vec(-1e3..1e3f64, 1..30)) {
            let s = ExperimentStats::from_values(&v).unwrap();
            prop_assert!(s.min <= s.p25 && s.p25 <= s.p50 && s.p50 <= s.p75 && s.p75 <= s.max);
            prop_assert_eq!(s.count, v.len());
            prop_assert!(s.mean >= s.min - 1e-9 && s.mean <= s.max + 1e-9);
        }
    }
}
