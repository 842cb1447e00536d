//! Lasso by cyclic coordinate descent on `Σ(y - Xβ)² + λ Σ|β_j|`, whose
//! coordinate update is `β_j = S(x_jᵀ r_j, λ/2) / x_jᵀ x_j` with `r_j` the
//! partial residual and `S` the soft threshold.

use super::data::SelectionData;
use super::mask::{top_k, FeatureMask, SelectorKind};
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

pub const DEFAULT_LAMBDA: f64 = 0.02;
pub const TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 100_000;
/// Halvings of λ tried when padding a too-sparse solution.
const PATH_STEPS: usize = 60;

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Coordinate descent without intercept. Stops when the largest coefficient
/// change in a sweep is below [`TOLERANCE`].
pub fn lasso_fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if lambda < 0.0 {
        return Err(Error::config(format!("λ = {lambda} is negative")));
    }
    let (n, d) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::shape(format!("{n} rows for {} targets", y.len())));
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|j| x.col(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut beta = vec![0.0; d];
    let mut r = y.to_vec();
    for sweep in 0..MAX_SWEEPS {
        let mut delta = 0.0f64;
        for j in 0..d {
            if norms[j] == 0.0 {
                continue;
            }
            let rho: f64 = cols[j].iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() + norms[j] * beta[j];
            let new = soft_threshold(rho, lambda / 2.0) / norms[j];
            let change = new - beta[j];
            if change != 0.0 {
                for (ri, xi) in r.iter_mut().zip(&cols[j]) {
                    *ri -= change * xi;
                }
                beta[j] = new;
                delta = delta.max(change.abs());
            }
        }
        if delta < TOLERANCE {
            return Ok(beta);
        }
        if sweep + 1 == MAX_SWEEPS {
            return Err(Error::Solver {
                iterations: MAX_SWEEPS,
                residual: delta,
            });
        }
    }
    unreachable!()
}

/// Centers every column and scales it to unit (population) variance;
/// constant columns become zero. The target is centered.
pub fn standardize(data: &SelectionData) -> (Matrix, Vec<f64>) {
    let (n, d) = (data.len(), data.n_features());
    let mut out = vec![0.0; n * d];
    for j in 0..d {
        let c = data.x.col(j);
        let mean = c.iter().sum::<f64>() / n as f64;
        let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for i in 0..n {
            out[i * d + j] = if sd > 0.0 { (c[i] - mean) / sd } else { 0.0 };
        }
    }
    let my = data.y.iter().sum::<f64>() / n as f64;
    (
        Matrix::new(n, d, out).expect("finite"),
        data.y.iter().map(|v| v - my).collect(),
    )
}

/// Lasso on standardized inputs; the mask holds the `k` largest `|β|`. When
/// fewer than `k` coefficients are nonzero, the remainder is filled from the
/// solutions at `λ/2, λ/4, ...` in order of `|β|`. Scores are the standardized
/// coefficients at `λ`.
pub fn lasso_select(data: &SelectionData, lambda: f64, k: usize) -> Result<FeatureMask> {
    let d = data.n_features();
    if k > d {
        return Err(Error::config(format!("k = {k} exceeds {d} features")));
    }
    let (x, y) = standardize(data);
    let beta = lasso_fit(&x, &y, lambda)?;
    let mut chosen: Vec<usize> = (0..d).filter(|&j| beta[j] != 0.0).collect();
    if chosen.len() >= k {
        let abs: Vec<f64> = beta.iter().map(|b| b.abs()).collect();
        chosen = top_k(&abs, k);
    } else {
        let mut l = lambda;
        for _ in 0..PATH_STEPS {
            if chosen.len() >= k {
                break;
            }
            l *= 0.5;
            let path = lasso_fit(&x, &y, l)?;
            let scores: Vec<f64> = (0..d)
                .map(|j| {
                    if chosen.contains(&j) || path[j] == 0.0 {
                        -1.0
                    } else {
                        path[j].abs()
                    }
                })
                .collect();
            let fresh = (0..d).filter(|&j| scores[j] >= 0.0).count();
            chosen.extend(top_k(&scores, fresh.min(k - chosen.len())));
        }
        if chosen.len() < k {
            // Columns with no signal at any λ: lowest indices.
            let rest: Vec<usize> = (0..d).filter(|j| !chosen.contains(j)).take(k - chosen.len()).collect();
            chosen.extend(rest);
        }
        chosen.sort_unstable();
    }
    Ok(FeatureMask::from_indices(&chosen, SelectorKind::Lasso)?.with_scores(beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::N_FEATURES;
    use crate::numkernel::{least_squares, RngState};

    fn random(n: usize, d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = RngState::new(seed);
        let x = Matrix::new(n, d, (0..n * d).map(|_| rng.normal()).collect()).unwrap();
        let y = (0..n)
            .map(|r| 2.0 * x.row(r)[0] - x.row(r)[1] + 0.5 * x.row(r)[3] + 0.1 * rng.normal())
            .collect();
        (x, y)
    }

    #[test]
    fn zero_lambda_is_ols() {
        let (x, y) = random(60, 6, 1);
        let beta = lasso_fit(&x, &y, 0.0).unwrap();
        let ols = least_squares(&x, &Matrix::column(&y)).unwrap().into_vec();
        for (a, b) in beta.iter().zip(&ols) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn lambda_max_zeroes_everything() {
        let (x, y) = random(40, 5, 2);
        let lmax = (0..5)
            .map(|j| 2.0 * x.col(j).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(lasso_fit(&x, &y, lmax).unwrap().iter().all(|&b| b == 0.0));
        assert!(lasso_fit(&x, &y, 0.9 * lmax).unwrap().iter().any(|&b| b != 0.0));
    }

    #[test]
    fn orthonormal_closed_form() {
        // Columns of a scaled Hadamard matrix are orthonormal.
        let h = [
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0],
        ];
        let x = Matrix::new(4, 4, h.iter().flatten().map(|v| v / 2.0).collect()).unwrap();
        let y = vec![3.0, -1.0, 0.4, 2.2];
        let ols: Vec<f64> = (0..4)
            .map(|j| x.col(j).iter().zip(&y).map(|(a, b)| a * b).sum())
            .collect();
        for lambda in [0.0, 0.3, 1.0, 2.5, 10.0] {
            let beta = lasso_fit(&x, &y, lambda).unwrap();
            for j in 0..4 {
                assert!((beta[j] - soft_threshold(ols[j], lambda / 2.0)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn path_sparsity_monotone() {
        let (x, y) = random(80, 12, 3);
        let mut last = usize::MAX;
        for step in 0..10 {
            let lambda = 0.5 * 2f64.powi(step);
            let nz = lasso_fit(&x, &y, lambda).unwrap().iter().filter(|&&b| b != 0.0).count();
            assert!(nz <= last, "λ = {lambda}: {nz} > {last}");
            last = nz;
        }
    }

    #[test]
    fn select_pads_to_k() {
        let (x, y) = random(100, N_FEATURES, 4);
        let data = SelectionData::new(x, y).unwrap();
        for lambda in [0.02, 50.0, 1e4] {
            let m = lasso_select(&data, lambda, 30).unwrap();
            assert_eq!(m.popcount(), 30);
            assert!(m.bits()[0] && m.bits()[1]);
        }
    }
}
