//! Linear SVR surrogate tuned by grid search, the model the SHAP exports
//! explain by default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featsel::{svr_fit, SelectionData, SvrModel};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateGrid {
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl Default for SurrogateGrid {
    fn default() -> Self {
        SurrogateGrid {
            c: vec![0.1, 1.0, 10.0, 100.0],
            epsilon: vec![0.01, 0.1, 0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub c: f64,
    pub epsilon: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub model: SvrModel,
    pub best: GridScore,
    /// Every grid point, C-major.
    pub scores: Vec<GridScore>,
}

impl Surrogate {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.model.predict_row(x)
    }
}

pub fn mse(model: &SvrModel, data: &SelectionData) -> f64 {
    let p = model.predict(&data.x);
    p.iter().zip(&data.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / data.len() as f64
}

/// Fits one SVR per grid point on `train` and keeps the lowest validation
/// MSE (first in grid order on ties).
pub fn fit_surrogate_svr(train: &SelectionData, validation: &SelectionData, grid: &SurrogateGrid) -> Result<Surrogate> {
    if grid.c.is_empty() || grid.epsilon.is_empty() {
        return Err(Error::config("empty surrogate grid"));
    }
    if validation.is_empty() || validation.n_features() != train.n_features() {
        return Err(Error::shape("validation set is empty or has a different width"));
    }
    let points: Vec<(f64, f64)> = grid
        .c
        .iter()
        .flat_map(|&c| grid.epsilon.iter().map(move |&e| (c, e)))
        .collect();
    let fits = par::map_slice(&points, |&(c, epsilon)| -> Result<(SvrModel, GridScore)> {
        let model = svr_fit(train, c, epsilon)?;
        let validation_mse = mse(&model, validation);
        Ok((
            model,
            GridScore {
                c,
                epsilon,
                validation_mse,
            },
        ))
    });
    let mut scores = Vec::with_capacity(points.len());
    let mut best: Option<(SvrModel, GridScore)> = None;
    for fit in fits {
        let (model, score) = fit?;
        scores.push(score);
        if best
            .as_ref()
            .is_none_or(|(_, b)| score.validation_mse < b.validation_mse)
        {
            best = Some((model, score));
        }
    }
    let (model, best) = best.expect("grid is nonempty");
    Ok(Surrogate { model, best, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{least_squares, Matrix, RngState};

    fn linear(rng: &mut RngState, n: usize, d: usize) -> SelectionData {
        let x = Matrix::new(n, d, (0..n * d).map(|_| rng.uniform()).collect()).unwrap();
        let y = (0..n)
            .map(|r| 0.2 + 0.5 * x.get(r, 0) - 0.3 * x.get(r, 2) + 0.02 * rng.normal())
            .collect();
        SelectionData::new(x, y).unwrap()
    }

    #[test]
    fn close_to_ols_on_linear_target() {
        let mut rng = RngState::new(1);
        let data = linear(&mut rng, 200, 4);
        let (train, val) = data.split(0.8).unwrap();
        let s = fit_surrogate_svr(&train, &val, &SurrogateGrid::default()).unwrap();
        assert_eq!(s.scores.len(), 12);
        let with_one = |x: &Matrix| {
            let rows: Vec<Vec<f64>> = (0..x.rows()).map(|r| [&[1.0], x.row(r)].concat()).collect();
            Matrix::from_rows(&rows).unwrap()
        };
        let beta = least_squares(&with_one(&train.x), &Matrix::column(&train.y))
            .unwrap()
            .into_vec();
        let xv = with_one(&val.x);
        let ols = (0..val.len())
            .map(|r| {
                let p: f64 = xv.row(r).iter().zip(&beta).map(|(a, b)| a * b).sum();
                (p - val.y[r]).powi(2)
            })
            .sum::<f64>()
            / val.len() as f64;
        assert!(s.best.validation_mse <= 2.0 * ols, "{} vs {ols}", s.best.validation_mse);
    }

    #[test]
    fn single_point_grid_and_determinism() {
        let mut rng = RngState::new(2);
        let data = linear(&mut rng, 80, 3);
        let (train, val) = data.split(0.75).unwrap();
        let grid = SurrogateGrid {
            c: vec![1.0],
            epsilon: vec![0.1],
        };
        let a = fit_surrogate_svr(&train, &val, &grid).unwrap();
        assert_eq!((a.best.c, a.best.epsilon), (1.0, 0.1));
        assert_eq!(a, fit_surrogate_svr(&train, &val, &grid).unwrap());
        assert!(fit_surrogate_svr(
            &train,
            &val,
            &SurrogateGrid {
                c: vec![],
                epsilon: vec![0.1]
            }
        )
        .is_err());
    }
}
