//! One-sided Diebold–Mariano comparison of two forecasts under absolute-error
//! loss, with the Harvey–Leybourne–Newbold small-sample correction.
//!
//! The loss differential is `d_t = |e1_t| - |e2_t|`, so a positive statistic
//! means the second forecast has the smaller errors.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const MIN_DM_LENGTH: usize = 10;

/// Alternative hypothesis of a one-sided test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DmSide {
    /// H1: E[d] > 0, the second forecast is more accurate.
    F2Better,
    /// H1: E[d] < 0, the first forecast is more accurate.
    F1Better,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Forecast {
    F1,
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Corrected statistic, compared against Student-t with `n - 1` df.
    pub statistic: f64,
    /// Uncorrected `d̄ / sqrt(γ0 / T)`.
    pub raw_statistic: f64,
    pub p_value: f64,
    pub side: DmSide,
    /// Forecast with the smaller mean absolute error.
    pub favors: Forecast,
    pub n: usize,
}

/// `e1`, `e2` are forecast errors (forecast minus actual) on the same days.
pub fn dm_test(e1: &[f64], e2: &[f64], side: DmSide) -> Result<DmResult> {
    if e1.len() != e2.len() {
        return Err(Error::shape(format!(
            "error series of length {} and {}",
            e1.len(),
            e2.len()
        )));
    }
    let n = e1.len();
    if n < MIN_DM_LENGTH {
        return Err(Error::config(format!(
            "DM test needs at least {MIN_DM_LENGTH} pairs, got {n}"
        )));
    }
    let d: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a.abs() - b.abs()).collect();
    if d.iter().all(|&v| v == d[0]) {
        return Err(Error::Degenerate("loss differential is constant".into()));
    }
    let t = n as f64;
    let mean = d.iter().sum::<f64>() / t;
    let gamma0 = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t;
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if gamma0 <= (1e-14 * scale).powi(2) {
        return Err(Error::Degenerate("loss differential has zero variance".into()));
    }
    let raw = mean / (gamma0 / t).sqrt();
    // Horizon 1: sqrt((T + 1 - 2h + h(h - 1)/T) / T) reduces to sqrt((T - 1)/T).
    let statistic = raw * ((t - 1.0) / t).sqrt();
    let dist = StudentsT::new(0.0, 1.0, t - 1.0).expect("positive degrees of freedom");
    let p_value = match side {
        DmSide::F2Better => dist.sf(statistic),
        DmSide::F1Better => dist.cdf(statistic),
    };
    Ok(DmResult {
        statistic,
        raw_statistic: raw,
        p_value: p_value.clamp(0.0, 1.0),
        side,
        favors: if mean > 0.0 { Forecast::F2 } else { Forecast::F1 },
        n,
    })
}

/// Significance marker for a one-sided p-value: `***` 1%, `**` 5%, `*` 10%,
/// `#` 15%.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else if p < 0.15 {
        "#"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmCell {
    pub statistic: f64,
    /// One-sided p-value in the direction of the statistic's sign.
    pub p_value: f64,
    pub stars: String,
}

/// Pairwise comparison table: row `i` is F1, column `j` is F2. The diagonal
/// and pairs that cannot be tested are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmMatrix {
    pub models: Vec<String>,
    pub cells: Vec<Vec<Option<DmCell>>>,
    /// Pairs skipped because the test was degenerate, with the reason.
    pub skipped: Vec<(String, String, String)>,
}

/// Builds the matrix from per-model error series of equal length.
pub fn dm_matrix(models: &[(String, Vec<f64>)]) -> Result<DmMatrix> {
    let k = models.len();
    let mut cells = vec![vec![None; k]; k];
    let mut skipped = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let probe = dm_test(&models[i].1, &models[j].1, DmSide::F2Better);
            match probe {
                Ok(r) => {
                    let p = if r.statistic >= 0.0 { r.p_value } else { 1.0 - r.p_value };
                    cells[i][j] = Some(DmCell {
                        statistic: r.statistic,
                        p_value: p,
                        stars: stars(p).to_string(),
                    });
                }
                Err(Error::Degenerate(reason)) => {
                    if i < j {
                        skipped.push((models[i].0.clone(), models[j].0.clone(), reason));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(DmMatrix {
        models: models.iter().map(|(m, _)| m.clone()).collect(),
        cells,
        skipped,
    })
}

impl DmMatrix {
    /// Table layout: header row of F2 ids, one row per F1 id, cells like
    /// `-2.31**`, blank diagonal.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("F1\\F2");
        for m in &self.models {
            write!(out, ",{m}").unwrap();
        }
        out.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            out.push_str(&self.models[i]);
            for cell in row {
                out.push(',');
                if let Some(c) = cell {
                    write!(out, "{:.2}{}", c.statistic, c.stars).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::RngState;

    fn noise(rng: &mut RngState, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.normal()).collect()
    }

    #[test]
    fn identical_errors_are_degenerate() {
        let e = noise(&mut RngState::new(1), 50);
        assert!(matches!(dm_test(&e, &e, DmSide::F2Better), Err(Error::Degenerate(_))));
    }

    #[test]
    fn constant_offset_is_degenerate() {
        let e2: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let e1: Vec<f64> = e2.iter().map(|v| v + 1.0).collect();
        assert!(matches!(dm_test(&e1, &e2, DmSide::F2Better), Err(Error::Degenerate(_))));
    }

    #[test]
    fn worse_first_forecast_favors_second() {
        let mut rng = RngState::new(2);
        let n = 200;
        let e2: Vec<f64> = noise(&mut rng, n);
        let e1: Vec<f64> = e2.iter().map(|v| v.abs() + 1.0 + 0.5 * rng.normal()).collect();
        let r = dm_test(&e1, &e2, DmSide::F2Better).unwrap();
        // Hand computation of the same statistic.
        let d: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a.abs() - b.abs()).collect();
        let m = d.iter().sum::<f64>() / n as f64;
        let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        let raw = m / (v / n as f64).sqrt();
        assert!((r.raw_statistic - raw).abs() < 1e-10);
        assert!((r.statistic - raw * ((n as f64 - 1.0) / n as f64).sqrt()).abs() < 1e-10);
        assert!(r.statistic > 0.0);
        assert_eq!(r.favors, Forecast::F2);
        assert!(r.p_value < 0.01);
        let other = dm_test(&e1, &e2, DmSide::F1Better).unwrap();
        assert!(other.p_value > 0.99);
    }

    #[test]
    fn antisymmetric() {
        let mut rng = RngState::new(3);
        let a = noise(&mut rng, 60);
        let b = noise(&mut rng, 60);
        let ab = dm_test(&a, &b, DmSide::F2Better).unwrap();
        let ba = dm_test(&b, &a, DmSide::F2Better).unwrap();
        assert!((ab.statistic + ba.statistic).abs() < 1e-12);
        assert!((ab.p_value - dm_test(&b, &a, DmSide::F1Better).unwrap().p_value).abs() < 1e-12);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            dm_test(&[1.0; 5], &[2.0; 5], DmSide::F2Better),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn null_rejection_rate() {
        let mut rng = RngState::new(4);
        let trials = 1000;
        let mut rejected = 0;
        for _ in 0..trials {
            let a = noise(&mut rng, 200);
            let b = noise(&mut rng, 200);
            if dm_test(&a, &b, DmSide::F2Better).unwrap().p_value < 0.05 {
                rejected += 1;
            }
        }
        let rate = rejected as f64 / trials as f64;
        assert!((rate - 0.05).abs() <= 0.02, "{rate}");
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.03), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.12), "#");
        assert_eq!(stars(0.5), "");
    }

    #[test]
    fn matrix_layout_mirrors() {
        let mut rng = RngState::new(5);
        let base = noise(&mut rng, 100);
        let models: Vec<(String, Vec<f64>)> = (0..3)
            .map(|k| {
                let e = base
                    .iter()
                    .map(|v| v * (1.0 + k as f64 * 0.3) + 0.2 * rng.normal())
                    .collect();
                (format!("M{k}"), e)
            })
            .collect();
        let m = dm_matrix(&models).unwrap();
        for i in 0..3 {
            assert!(m.cells[i][i].is_none());
            for j in 0..3 {
                if i != j {
                    let a = m.cells[i][j].as_ref().unwrap();
                    let b = m.cells[j][i].as_ref().unwrap();
                    assert!((a.statistic + b.statistic).abs() < 1e-12);
                    assert_eq!(a.stars, b.stars);
                }
            }
        }
        // M0 has the smallest errors, so row M0 is negative.
        assert!(m.cells[0][2].as_ref().unwrap().statistic < 0.0);
        let csv = m.to_csv();
        assert!(csv.starts_with("F1\\F2,M0,M1,M2\nM0,,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
