//! Shapley attributions for a black-box predictor.
//!
//! A coalition's value is the model output averaged over background rows,
//! with the instance's values kept for present features and the background
//! row's values used for absent ones (interventional imputation).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{Matrix, RngState};
use crate::par;

/// Largest dimension [`exact_shapley`] will enumerate.
pub const MAX_EXACT_FEATURES: usize = 15;
/// Beyond this dimension [`kernel_shap`] never enumerates all coalitions.
const MAX_ENUMERATED_FEATURES: usize = 20;

/// Anything that maps one feature vector to a real output.
pub trait Predictor: Sync {
    fn predict(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for F {
    fn predict(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    pub rows: Matrix,
}

impl BackgroundSet {
    pub fn new(rows: Matrix) -> Result<Self> {
        if rows.rows() == 0 {
            return Err(Error::config("background set is empty"));
        }
        Ok(BackgroundSet { rows })
    }

    /// `size` distinct rows of `x` drawn uniformly, kept in their original
    /// order; all rows when `x` has no more than `size`.
    pub fn sample(x: &Matrix, size: usize, rng: &mut RngState) -> Result<Self> {
        if x.rows() <= size {
            return BackgroundSet::new(x.clone());
        }
        let mut idx = rng.sample_indices(x.rows(), size);
        idx.sort_unstable();
        let mut values = Vec::with_capacity(size * x.cols());
        for &i in &idx {
            values.extend_from_slice(x.row(i));
        }
        BackgroundSet::new(Matrix::new(size, x.cols(), values)?)
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows() == 0
    }

    /// Mean model output over the background rows.
    pub fn expected_output(&self, model: &dyn Predictor) -> f64 {
        (0..self.len()).map(|r| model.predict(self.rows.row(r))).sum::<f64>() / self.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub phi: Vec<f64>,
    /// Expected output over the background set.
    pub base: f64,
    /// Model output at the instance.
    pub prediction: f64,
    pub instance: Vec<f64>,
    pub background_rows: usize,
    /// Distinct coalitions used in the regression (excluding empty and full).
    pub coalitions: usize,
}

fn check(instance: &[f64], background: &BackgroundSet) -> Result<()> {
    if instance.len() != background.dim() || instance.is_empty() {
        return Err(Error::shape(format!(
            "instance has {} features, background {}",
            instance.len(),
            background.dim()
        )));
    }
    Ok(())
}

/// Value of the coalition `present` (one flag per feature).
pub fn coalition_value(model: &dyn Predictor, instance: &[f64], background: &BackgroundSet, present: &[bool]) -> f64 {
    let mut x = vec![0.0; instance.len()];
    let mut total = 0.0;
    for r in 0..background.len() {
        let b = background.rows.row(r);
        for j in 0..x.len() {
            x[j] = if present[j] { instance[j] } else { b[j] };
        }
        total += model.predict(&x);
    }
    total / background.len() as f64
}

fn mask_bits(mask: u64, d: usize) -> Vec<bool> {
    (0..d).map(|j| mask >> j & 1 == 1).collect()
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Classical Shapley values by the subset formula over all `2^d` coalitions.
pub fn exact_shapley(model: &dyn Predictor, instance: &[f64], background: &BackgroundSet) -> Result<Vec<f64>> {
    check(instance, background)?;
    let d = instance.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::Feasibility(format!(
            "exact Shapley over {d} features needs 2^{d} coalitions (limit {MAX_EXACT_FEATURES} features)"
        )));
    }
    let values = par::map_indexed(1 << d, |m| {
        coalition_value(model, instance, background, &mask_bits(m as u64, d))
    });
    let ln_d = ln_factorial(d);
    let weight: Vec<f64> = (0..d)
        .map(|s| (ln_factorial(s) + ln_factorial(d - s - 1) - ln_d).exp())
        .collect();
    let mut phi = vec![0.0; d];
    for (j, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for m in 0..1usize << d {
            if m & bit == 0 {
                *p += weight[m.count_ones() as usize] * (values[m | bit] - values[m]);
            }
        }
    }
    Ok(phi)
}

/// Shapley kernel weight of a coalition of size `s` out of `d`.
pub fn shapley_kernel(d: usize, s: usize) -> f64 {
    let ln_binom = ln_factorial(d) - ln_factorial(s) - ln_factorial(d - s);
    (d - 1) as f64 / (ln_binom.exp() * s as f64 * (d - s) as f64)
}

/// Coalitions with their regression weights.
fn coalitions(d: usize, n_coalitions: usize, rng: &mut RngState) -> Vec<(Vec<bool>, f64)> {
    let proper = if d >= 64 { u64::MAX } else { (1u64 << d) - 2 };
    if d <= MAX_ENUMERATED_FEATURES && n_coalitions as u64 >= proper {
        return (1..=proper)
            .map(|m| (mask_bits(m, d), shapley_kernel(d, m.count_ones() as usize)))
            .collect();
    }
    // Sizes drawn in proportion to their total kernel mass, then a uniform
    // subset of that size; repeated draws add up as weights.
    let mass: Vec<f64> = (1..d).map(|s| (d - 1) as f64 / (s * (d - s)) as f64).collect();
    let total: f64 = mass.iter().sum();
    let mut counts: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
    for _ in 0..n_coalitions.saturating_sub(2) {
        let mut u = rng.uniform() * total;
        let mut s = d - 1;
        for (i, m) in mass.iter().enumerate() {
            if u < *m {
                s = i + 1;
                break;
            }
            u -= m;
        }
        let mut z = vec![false; d];
        for j in rng.sample_indices(d, s) {
            z[j] = true;
        }
        *counts.entry(z).or_insert(0.0) += 1.0;
    }
    counts.into_iter().collect()
}

/// Efficiency-constrained weighted least squares; `None` when the system is
/// singular.
fn solve_constrained(rows: &[(Vec<bool>, f64)], values: &[f64], base: f64, delta: f64) -> Option<Vec<f64>> {
    let d = rows[0].0.len();
    let m = d - 1;
    let last = |z: &[bool]| if z[m] { 1.0 } else { 0.0 };
    let mut ata = DMatrix::<f64>::zeros(m, m);
    let mut atb = DVector::<f64>::zeros(m);
    let mut a = vec![0.0; m];
    for ((z, w), v) in rows.iter().zip(values) {
        let zl = last(z);
        for j in 0..m {
            a[j] = if z[j] { 1.0 } else { 0.0 } - zl;
        }
        let t = v - base - zl * delta;
        for i in 0..m {
            if a[i] == 0.0 {
                continue;
            }
            atb[i] += w * a[i] * t;
            for j in 0..m {
                ata[(i, j)] += w * a[i] * a[j];
            }
        }
    }
    let scale = (0..m).map(|i| ata[(i, i)]).fold(0.0, f64::max);
    let chol = ata.cholesky()?;
    let l = chol.l_dirty();
    if (0..m).any(|i| l[(i, i)] * l[(i, i)] <= 1e-12 * scale) {
        return None;
    }
    let head = chol.solve(&atb);
    let mut phi: Vec<f64> = head.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Some(phi)
}

/// Kernel SHAP with the efficiency constraint imposed exactly. When
/// `n_coalitions` covers every proper coalition they are all enumerated with
/// their kernel weights; otherwise coalitions are sampled from the kernel.
pub fn kernel_shap(
    model: &dyn Predictor,
    instance: &[f64],
    background: &BackgroundSet,
    n_coalitions: usize,
    rng: &mut RngState,
) -> Result<ShapExplanation> {
    check(instance, background)?;
    let d = instance.len();
    if n_coalitions < d + 2 {
        return Err(Error::config(format!(
            "{n_coalitions} coalitions for {d} features (need at least {})",
            d + 2
        )));
    }
    let base = background.expected_output(model);
    let prediction = model.predict(instance);
    let delta = prediction - base;
    let explanation = |phi: Vec<f64>, coalitions: usize| ShapExplanation {
        phi,
        base,
        prediction,
        instance: instance.to_vec(),
        background_rows: background.len(),
        coalitions,
    };
    if d == 1 {
        return Ok(explanation(vec![delta], 0));
    }
    let mut budget = n_coalitions;
    for _attempt in 0..2 {
        let rows = coalitions(d, budget, rng);
        let values = par::map_slice(&rows, |(z, _)| coalition_value(model, instance, background, z));
        if let Some(phi) = solve_constrained(&rows, &values, base, delta) {
            return Ok(explanation(phi, rows.len()));
        }
        budget = budget.saturating_mul(2);
    }
    Err(Error::Degenerate(format!(
        "coalition system for {d} features stayed singular with {budget} samples"
    )))
}

/// Explains every row of `instances`; row `i` samples with `rng.fork(i)`.
pub fn explain_rows(
    model: &dyn Predictor,
    instances: &Matrix,
    background: &BackgroundSet,
    n_coalitions: usize,
    rng: &RngState,
) -> Result<Vec<ShapExplanation>> {
    par::map_indexed(instances.rows(), |i| {
        kernel_shap(
            model,
            instances.row(i),
            background,
            n_coalitions,
            &mut rng.fork(i as u64),
        )
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn background(rng: &mut RngState, n: usize, d: usize) -> BackgroundSet {
        BackgroundSet::new(Matrix::new(n, d, (0..n * d).map(|_| rng.normal()).collect()).unwrap()).unwrap()
    }

    fn means(bg: &BackgroundSet) -> Vec<f64> {
        (0..bg.dim())
            .map(|j| bg.rows.col(j).iter().sum::<f64>() / bg.len() as f64)
            .collect()
    }

    #[test]
    fn constant_model() {
        let mut rng = RngState::new(1);
        let bg = background(&mut rng, 20, 4);
        let f = |_: &[f64]| 7.0;
        let e = kernel_shap(&f, &[1.0, 2.0, 3.0, 4.0], &bg, 100, &mut rng).unwrap();
        assert!(e.phi.iter().all(|p| p.abs() < 1e-12));
        assert_eq!(e.base, 7.0);
    }

    #[test]
    fn additive_linear_model() {
        let mut rng = RngState::new(2);
        let bg = background(&mut rng, 50, 2);
        let m = means(&bg);
        let f = |x: &[f64]| 3.0 * x[0] + 2.0 * x[1];
        let x = [1.5, -0.7];
        let e = kernel_shap(&f, &x, &bg, 16, &mut rng).unwrap();
        assert!((e.phi[0] - 3.0 * (x[0] - m[0])).abs() < 1e-10);
        assert!((e.phi[1] - 2.0 * (x[1] - m[1])).abs() < 1e-10);
    }

    #[test]
    fn full_enumeration_matches_exact() {
        let mut rng = RngState::new(3);
        for d in [2, 3, 5, 8] {
            let bg = background(&mut rng, 10, d);
            let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let f = move |x: &[f64]| {
                let lin: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                lin.tanh() + x[0] * x[d - 1] + (x[1] * 0.5).sin()
            };
            let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let exact = exact_shapley(&f, &x, &bg).unwrap();
            let e = kernel_shap(&f, &x, &bg, 1 << d, &mut rng).unwrap();
            assert_eq!(e.coalitions, (1 << d) - 2);
            for (a, b) in exact.iter().zip(&e.phi) {
                assert!((a - b).abs() < 1e-8, "d={d}: {a} vs {b}");
            }
            let sum: f64 = e.phi.iter().sum();
            assert!((sum + e.base - e.prediction).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_coalitions_keep_efficiency() {
        let mut rng = RngState::new(4);
        let d = 25;
        let bg = background(&mut rng, 8, d);
        let f = |x: &[f64]| x.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * v).sum::<f64>() + x[0] * x[1];
        let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let e = kernel_shap(&f, &x, &bg, 400, &mut rng).unwrap();
        let sum: f64 = e.phi.iter().sum();
        assert!((sum + e.base - e.prediction).abs() < 1e-8);
        assert!(e.coalitions > d);
    }

    #[test]
    fn exact_axioms() {
        let mut rng = RngState::new(5);
        let col: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
        // Identical marginals for x0 and x1; x2 is ignored.
        let mut vals = Vec::new();
        for (i, v) in col.iter().enumerate() {
            vals.extend([*v, *v, col[(i + 7) % 30]]);
        }
        let bg = BackgroundSet::new(Matrix::new(30, 3, vals).unwrap()).unwrap();
        let f = |x: &[f64]| x[0] + x[1];
        let phi = exact_shapley(&f, &[0.8, 0.8, 5.0], &bg).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-12);
        assert_eq!(phi[2], 0.0);
        let base = bg.expected_output(&f);
        assert!((phi.iter().sum::<f64>() - (1.6 - base)).abs() < 1e-10);
    }

    #[test]
    fn exact_refuses_wide_inputs() {
        let bg = BackgroundSet::new(Matrix::zeros(2, 16)).unwrap();
        let f = |_: &[f64]| 0.0;
        assert!(matches!(exact_shapley(&f, &[0.0; 16], &bg), Err(Error::Feasibility(_))));
    }

    #[test]
    fn too_few_coalitions() {
        let bg = BackgroundSet::new(Matrix::zeros(2, 4)).unwrap();
        let f = |_: &[f64]| 0.0;
        assert!(kernel_shap(&f, &[0.0; 4], &bg, 5, &mut RngState::new(0)).is_err());
    }

    #[test]
    fn kernel_weights_symmetric() {
        for s in 1..9 {
            assert!((shapley_kernel(9, s) - shapley_kernel(9, 9 - s)).abs() < 1e-15);
        }
        assert!((shapley_kernel(4, 1) - 3.0 / (4.0 * 3.0)).abs() < 1e-15);
    }

    #[test]
    fn monotone_sign() {
        let mut rng = RngState::new(6);
        let bg = background(&mut rng, 40, 3);
        let m = means(&bg);
        let f = |x: &[f64]| 2.0 * x[0] - x[1] + 0.5 * x[2];
        let x = [m[0] + 1.0, m[1] - 1.0, m[2]];
        let e = kernel_shap(&f, &x, &bg, 8, &mut rng).unwrap();
        assert!(e.phi[0] > 0.0);
    }

    #[test]
    fn background_sampling() {
        let x = Matrix::new(10, 1, (0..10).map(f64::from).collect()).unwrap();
        let bg = BackgroundSet::sample(&x, 4, &mut RngState::new(1)).unwrap();
        assert_eq!(bg.len(), 4);
        let col = bg.rows.col(0);
        assert!(col.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(BackgroundSet::sample(&x, 50, &mut RngState::new(1)).unwrap().len(), 10);
        assert!(BackgroundSet::new(Matrix::zeros(0, 3)).is_err());
    }
}
