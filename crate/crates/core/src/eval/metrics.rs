//! Point-forecast accuracy: MAE, RMSE, MAPE and SMAPE (percentages scaled by
//! 100).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub smape: f64,
    pub n: usize,
    /// Rows left out of MAPE because the actual value was zero.
    #[serde(default)]
    pub mape_excluded: usize,
    /// Rows left out of SMAPE because actual and forecast were both zero.
    #[serde(default)]
    pub smape_excluded: usize,
}

impl MetricReport {
    pub const NAMES: [&'static str; 4] = ["mae", "rmse", "mape", "smape"];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "mae" => Some(self.mae),
            "rmse" => Some(self.rmse),
            "mape" => Some(self.mape),
            "smape" => Some(self.smape),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricOptions {
    /// Skip zero actuals in MAPE (and count them) instead of failing.
    pub tolerate_zeros: bool,
}

/// All four metrics; a zero actual value makes this fail with
/// [`Error::UndefinedMape`].
pub fn metrics(y: &[f64], yhat: &[f64]) -> Result<MetricReport> {
    metrics_with(y, yhat, MetricOptions::default())
}

pub fn metrics_with(y: &[f64], yhat: &[f64], options: MetricOptions) -> Result<MetricReport> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::shape(format!("{} actuals vs {} forecasts", y.len(), yhat.len())));
    }
    let n = y.len();
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut ape = 0.0;
    let mut sape = 0.0;
    let mut zeros = 0;
    let mut both_zero = 0;
    for (&a, &f) in y.iter().zip(yhat) {
        let e = a - f;
        abs += e.abs();
        sq += e * e;
        if a == 0.0 {
            zeros += 1;
        } else {
            ape += (e / a).abs();
        }
        let denom = (a.abs() + f.abs()) / 2.0;
        if denom == 0.0 {
            both_zero += 1;
        } else {
            sape += e.abs() / denom;
        }
    }
    if zeros > 0 && !options.tolerate_zeros {
        return Err(Error::UndefinedMape { zeros });
    }
    if both_zero == n {
        return Err(Error::Degenerate(
            "SMAPE undefined: every actual and forecast is zero".into(),
        ));
    }
    let mape = if zeros == n {
        f64::NAN
    } else {
        100.0 * ape / (n - zeros) as f64
    };
    Ok(MetricReport {
        mae: abs / n as f64,
        rmse: (sq / n as f64).sqrt(),
        mape,
        smape: 100.0 * sape / (n - both_zero) as f64,
        n,
        mape_excluded: zeros,
        smape_excluded: both_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_forecast() {
        let y = [3.0, -2.0, 7.5];
        let r = metrics(&y, &y).unwrap();
        assert_eq!((r.mae, r.rmse, r.mape, r.smape), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn single_point_by_hand() {
        let r = metrics(&[100.0], &[50.0]).unwrap();
        assert_eq!(r.mae, 50.0);
        assert_eq!(r.rmse, 50.0);
        assert_eq!(r.mape, 50.0);
        assert!((r.smape - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn smape_upper_bound() {
        assert_eq!(metrics(&[1.0], &[0.0]).unwrap().smape, 200.0);
    }

    #[test]
    fn zero_actuals() {
        assert!(matches!(
            metrics(&[0.0, 2.0], &[1.0, 1.0]),
            Err(Error::UndefinedMape { zeros: 1 })
        ));
        let r = metrics_with(&[0.0, 2.0], &[1.0, 1.0], MetricOptions { tolerate_zeros: true }).unwrap();
        assert_eq!(r.mape, 50.0);
        assert_eq!(r.mape_excluded, 1);
        assert!((r.smape - 100.0 * (2.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        let r = metrics_with(&[0.0, 2.0], &[0.0, 1.0], MetricOptions { tolerate_zeros: true }).unwrap();
        assert_eq!(r.smape_excluded, 1);
    }

    #[test]
    fn length_errors() {
        assert!(matches!(metrics(&[], &[]), Err(Error::Shape(_))));
        assert!(matches!(metrics(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![-100.0..-0.5f64, 0.5..100.0f64], n),
                prop::collection::vec(-100.0..100.0f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae((y, f) in pair()) {
            let r = metrics(&y, &f).unwrap();
            prop_assert!(r.rmse >= r.mae - 1e-12);
            prop_assert!(r.smape >= 0.0 && r.smape <= 200.0 + 1e-9);
        }

        #[test]
        fn smape_symmetric((y, f) in pair()) {
            let f: Vec<f64> = f.iter().map(|v| if *v == 0.0 { 1.0 } else { *v }).collect();
            let a = metrics(&y, &f).unwrap().smape;
            let b = metrics(&f, &y).unwrap().smape;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn scaling((y, f) in pair(), c in 0.1..50.0f64) {
            let r = metrics(&y, &f).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let fs: Vec<f64> = f.iter().map(|v| v * c).collect();
            let s = metrics(&ys, &fs).unwrap();
            prop_assert!((s.mae - c * r.mae).abs() <= 1e-9 * (1.0 + s.mae));
            prop_assert!((s.rmse - c * r.rmse).abs() <= 1e-9 * (1.0 + s.rmse));
            prop_assert!((s.mape - r.mape).abs() <= 1e-9 * (1.0 + r.mape));
            prop_assert!((s.smape - r.smape).abs() <= 1e-9 * (1.0 + r.smape));
        }
    }
}
