//! Linear ε-insensitive support vector regression.
//!
//! Primal: `min ½‖w‖² + C Σ (ξ_i + ξ*_i)` subject to
//! `y_i - w·x_i - b ≤ ε + ξ_i`, `w·x_i + b - y_i ≤ ε + ξ*_i`, slacks ≥ 0.
//!
//! Solved in the dual over `(α, α*) ∈ [0, C]^{2n}` with `Σ(α_i - α*_i) = 0`
//! by SMO with second-order working-set selection; `w = Σ(α_i - α*_i) x_i`.

use serde::{Deserialize, Serialize};

use super::data::SelectionData;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

use crate::numkernel::Matrix;

pub const MAX_ITERATIONS: usize = 100_000;
pub const TOLERANCE: f64 = 1e-6;
const TAU: f64 = 1e-12;
/// SMO steps between attempts to solve the current free set exactly.
const POLISH_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Upper-side slack `ξ_i` per training row.
    pub slack_upper: Vec<f64>,
    /// Lower-side slack `ξ*_i`.
    pub slack_lower: Vec<f64>,
    pub iterations: usize,
}

impl SvrModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.b + x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    pub fn primal_objective(&self) -> f64 {
        0.5 * self.w.iter().map(|v| v * v).sum::<f64>()
            + self.c * (self.slack_upper.iter().sum::<f64>() + self.slack_lower.iter().sum::<f64>())
    }
}

/// Primal objective of an arbitrary `(w, b)` on `data`.
pub fn svr_primal(data: &SelectionData, w: &[f64], b: f64, c: f64, epsilon: f64) -> f64 {
    let mut slack = 0.0;
    for r in 0..data.len() {
        let f = b + data.x.row(r).iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        slack += ((data.y[r] - f).abs() - epsilon).max(0.0);
    }
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * slack
}

pub fn svr_fit(data: &SelectionData, c: f64, epsilon: f64) -> Result<SvrModel> {
    if c.is_nan() || epsilon.is_nan() || c < 0.0 || epsilon < 0.0 {
        return Err(Error::config(format!(
            "SVR needs C ≥ 0 and ε ≥ 0, got C = {c}, ε = {epsilon}"
        )));
    }
    let n = data.len();
    let d = data.n_features();
    if n == 0 {
        return Err(Error::config("SVR on an empty dataset"));
    }
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = data.x.row(i).iter().zip(data.x.row(j)).map(|(a, b)| a * b).sum();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let kk = |s: usize, t: usize| k[(s % n) * n + t % n];
    // Variables 0..n are α (sign +1), n..2n are α* (sign -1).
    let m = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |s: usize, t: usize| sign(s) * sign(t) * kk(s, t);
    let mut alpha = vec![0.0; m];
    let mut grad: Vec<f64> = (0..m)
        .map(|t| {
            if t < n {
                epsilon - data.y[t]
            } else {
                epsilon + data.y[t - n]
            }
        })
        .collect();
    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            let movable = if sign(t) > 0.0 {
                !at_upper(alpha[t])
            } else {
                !at_lower(alpha[t])
            };
            if movable && -sign(t) * grad[t] >= g_max {
                g_max = -sign(t) * grad[t];
                i = t;
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        if i != usize::MAX {
            for t in 0..m {
                let movable = if sign(t) > 0.0 {
                    !at_lower(alpha[t])
                } else {
                    !at_upper(alpha[t])
                };
                if !movable {
                    continue;
                }
                let v = sign(t) * grad[t];
                g_max2 = g_max2.max(v);
                let diff = g_max + v;
                if diff > 0.0 {
                    let a = kk(i, i) + kk(t, t) - 2.0 * kk(i, t);
                    let obj = -diff * diff / if a > 0.0 { a } else { TAU };
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        let gap = g_max + g_max2;
        if i == usize::MAX || j == usize::MAX || gap < TOLERANCE {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::Solver {
                iterations,
                residual: gap,
            });
        }
        if iterations > 0 && iterations % POLISH_EVERY == 0 && polish(&k, &data.y, c, epsilon, &mut alpha) {
            for t in 0..n {
                let kb: f64 = (0..n).map(|s| k[t * n + s] * (alpha[s] - alpha[s + n])).sum();
                grad[t] = kb + epsilon - data.y[t];
                grad[t + n] = -kb + epsilon + data.y[t];
            }
            iterations += 1;
            continue;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if sign(i) != sign(j) {
            let quad = kk(i, i) + kk(j, j) + 2.0 * q(i, j);
            let delta = (-grad[i] - grad[j]) / if quad > 0.0 { quad } else { TAU };
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = kk(i, i) + kk(j, j) - 2.0 * q(i, j);
            let delta = (grad[i] - grad[j]) / if quad > 0.0 { quad } else { TAU };
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // Offset: mean over free variables, else the midpoint of the feasible range.
    let (mut ub, mut lb, mut free, mut sum_free) = (f64::INFINITY, f64::NEG_INFINITY, 0usize, 0.0);
    for t in 0..m {
        let yg = sign(t) * grad[t];
        let positive = sign(t) > 0.0;
        if at_upper(alpha[t]) {
            if positive {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if at_lower(alpha[t]) {
            if positive {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    };

    let mut w = vec![0.0; d];
    for r in 0..n {
        let coef = alpha[r] - alpha[r + n];
        if coef != 0.0 {
            for (wj, xj) in w.iter_mut().zip(data.x.row(r)) {
                *wj += coef * xj;
            }
        }
    }
    let mut model = SvrModel {
        w,
        b: -rho,
        c,
        epsilon,
        slack_upper: vec![0.0; n],
        slack_lower: vec![0.0; n],
        iterations,
    };
    for r in 0..n {
        let resid = data.y[r] - model.predict_row(data.x.row(r));
        model.slack_upper[r] = (resid - epsilon).max(0.0);
        model.slack_lower[r] = (-resid - epsilon).max(0.0);
    }
    Ok(model)
}

/// Dual objective in terms of `β = α - α*`.
fn dual_value(k: &[f64], y: &[f64], epsilon: f64, beta: &[f64]) -> f64 {
    let n = y.len();
    let mut q = 0.0;
    for i in 0..n {
        if beta[i] != 0.0 {
            q += beta[i] * (0..n).map(|j| k[i * n + j] * beta[j]).sum::<f64>();
        }
    }
    0.5 * q + (0..n).map(|i| epsilon * beta[i].abs() - y[i] * beta[i]).sum::<f64>()
}

/// Active-set refinement over the variables that are currently free, with
/// the bounded ones held fixed. While the reduced Hessian has a flat descent
/// direction the step follows it to the first bound; otherwise it takes the
/// Newton step, truncated at the box. Returns whether `alpha` changed.
fn polish(k: &[f64], y: &[f64], c: f64, epsilon: f64, alpha: &mut [f64]) -> bool {
    let n = y.len();
    let mut beta: Vec<f64> = (0..n).map(|t| alpha[t] - alpha[t + n]).collect();
    let start = dual_value(k, y, epsilon, &beta);
    let mut changed = false;
    for _ in 0..=n {
        let free: Vec<(usize, f64)> = (0..n)
            .filter_map(|t| {
                let v = beta[t];
                if v > 0.0 && v < c {
                    Some((t, 1.0))
                } else if v < 0.0 && -v < c {
                    Some((t, -1.0))
                } else {
                    None
                }
            })
            .collect();
        let f = free.len();
        if f < 2 {
            break;
        }
        let grad: Vec<f64> = free
            .iter()
            .map(|&(i, sgn)| (0..n).map(|j| k[i * n + j] * beta[j]).sum::<f64>() - y[i] + epsilon * sgn)
            .collect();
        let kff = DMatrix::from_fn(f, f, |r, col| k[free[r].0 * n + free[col].0]);
        let mut aug = DMatrix::zeros(f + 1, f);
        aug.view_mut((0, 0), (f, f)).copy_from(&kff);
        aug.row_mut(f).fill(1.0);
        let svd = aug.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let top = svd.singular_values.max();
        let tol = top * 1e-10 * (f as f64);
        let r = DVector::from_vec(grad.clone());
        // Flat directions: right singular vectors with negligible singular value,
        // plus any beyond the row count.
        let mut flat = DVector::zeros(f);
        for idx in 0..v_t.nrows() {
            if svd.singular_values[idx] <= tol {
                let v = v_t.row(idx).transpose();
                flat += &v * v.dot(&r);
            }
        }
        let (dir, newton) = if flat.norm() > 1e-12 * (1.0 + r.norm()) {
            (-flat, false)
        } else {
            // Newton step on the face: K δ + λ 1 = -r, 1ᵀδ = 0.
            let mut sys = DMatrix::zeros(f + 1, f + 1);
            sys.view_mut((0, 0), (f, f)).copy_from(&kff);
            for i in 0..f {
                sys[(i, f)] = 1.0;
                sys[(f, i)] = 1.0;
            }
            let mut rhs = DVector::zeros(f + 1);
            for i in 0..f {
                rhs[i] = -grad[i];
            }
            let Some(sol) = sys.full_piv_lu().solve(&rhs) else {
                break;
            };
            (sol.rows(0, f).into_owned(), true)
        };
        let mut step = if newton { 1.0 } else { f64::INFINITY };
        for (r, &(t, sgn)) in free.iter().enumerate() {
            let now = sgn * beta[t];
            let d = sgn * dir[r];
            if d < 0.0 {
                step = step.min(now / -d);
            } else if d > 0.0 {
                step = step.min((c - now) / d);
            }
        }
        if !(step.is_finite() && step > 0.0) {
            break;
        }
        let mut next = beta.clone();
        for (r, &(t, sgn)) in free.iter().enumerate() {
            let v = (sgn * beta[t] + step * sgn * dir[r]).clamp(0.0, c);
            let snapped = if v < 1e-13 * c.max(1.0) {
                0.0
            } else if c - v < 1e-13 * c.max(1.0) {
                c
            } else {
                v
            };
            next[t] = sgn * snapped;
        }
        // A NaN dual rejects the step as well.
        let (after, before) = (dual_value(k, y, epsilon, &next), dual_value(k, y, epsilon, &beta));
        if after.is_nan() || after > before {
            break;
        }
        beta = next;
        changed = true;
        if newton && step >= 1.0 {
            break;
        }
    }
    let end = dual_value(k, y, epsilon, &beta);
    if !changed || end.is_nan() || end >= start {
        return false;
    }
    for t in 0..n {
        alpha[t] = beta[t].max(0.0);
        alpha[t + n] = (-beta[t]).max(0.0);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::RngState;

    fn data(rows: &[(f64, f64)]) -> SelectionData {
        let x = Matrix::new(rows.len(), 1, rows.iter().map(|r| r.0).collect()).unwrap();
        SelectionData::new(x, rows.iter().map(|r| r.1).collect()).unwrap()
    }

    #[test]
    fn flat_solution_inside_tube() {
        let d = data(&[(0.0, 1.0), (1.0, 1.05), (2.0, 0.97), (3.0, 1.02)]);
        let m = svr_fit(&d, 10.0, 0.1).unwrap();
        assert_eq!(m.w, vec![0.0]);
        assert!(m.slack_upper.iter().chain(&m.slack_lower).all(|&s| s == 0.0));
    }

    #[test]
    fn zero_c_gives_zero_weights() {
        let d = data(&[(0.0, 0.0), (1.0, 5.0), (2.0, 10.0)]);
        let m = svr_fit(&d, 0.0, 0.1).unwrap();
        assert_eq!(m.w, vec![0.0]);
    }

    #[test]
    fn exact_line_tube_geometry() {
        let rows: Vec<(f64, f64)> = (0..11).map(|i| (i as f64 / 10.0, 2.0 * i as f64 / 10.0)).collect();
        let m = svr_fit(&data(&rows), 1e3, 0.1).unwrap();
        // Smallest slope keeping every point inside the tube: 2 - 2ε / range.
        assert!((m.w[0] - 1.8).abs() < 1e-6, "{}", m.w[0]);
        assert!(m.slack_upper.iter().chain(&m.slack_lower).all(|&s| s < 1e-6));
    }

    #[test]
    fn residuals_within_tube_plus_slack() {
        let mut rng = RngState::new(3);
        let n = 40;
        let x = Matrix::new(n, 3, (0..3 * n).map(|_| rng.normal()).collect()).unwrap();
        let y = (0..n)
            .map(|r| x.row(r)[0] - 0.5 * x.row(r)[2] + 0.3 * rng.normal())
            .collect();
        let d = SelectionData::new(x, y).unwrap();
        let m = svr_fit(&d, 1.0, 0.2).unwrap();
        for r in 0..n {
            let res = d.y[r] - m.predict_row(d.x.row(r));
            assert!(res <= m.epsilon + m.slack_upper[r] + 1e-12);
            assert!(-res <= m.epsilon + m.slack_lower[r] + 1e-12);
        }
        assert!((m.primal_objective() - svr_primal(&d, &m.w, m.b, 1.0, 0.2)).abs() < 1e-12);
        assert!(m.w[0] > 0.5 && m.w[2] < -0.2);
    }

    #[test]
    fn wide_linear_problem_converges() {
        let mut rng = RngState::new(0);
        let n = 120;
        let x = Matrix::new(n, 62, (0..62 * n).map(|_| rng.uniform()).collect()).unwrap();
        let y = (0..n).map(|r| 3.0 * x.row(r)[1] + 0.01 * rng.normal()).collect();
        let d = SelectionData::new(x, y).unwrap();
        let m = svr_fit(&d, 1.0, 0.01).unwrap();
        assert!(m.iterations < MAX_ITERATIONS / 10, "{}", m.iterations);
        assert!((m.w[1] - 3.0).abs() < 0.05);
    }
}
