//! Polynomial NARMAX fitted by extended least squares.
//!
//! Regressors at time `t`: intercept, `y(t-1..=t-ny)`, every input column at
//! `x(t..=t-nx+1)`, and `ε(t-1..=t-ne)`. Degree 2 adds all pairwise products
//! (squares included) of the output and noise lags; inputs stay linear, which
//! keeps the term count manageable with 62 inputs.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{least_squares, Matrix};

pub const ELS_MAX_ITERATIONS: usize = 20;
pub const ELS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarmaxOrder {
    pub ny: usize,
    pub nx: usize,
    pub ne: usize,
    pub degree: u8,
}

impl NarmaxOrder {
    /// First time index with a complete regressor vector.
    pub fn start(&self) -> usize {
        self.ny.max(self.ne).max(self.nx.saturating_sub(1))
    }

    pub fn term_count(&self, n_inputs: usize) -> usize {
        let ar = self.ny + self.ne;
        let quad = if self.degree == 2 { ar * (ar + 1) / 2 } else { 0 };
        1 + ar + self.nx * n_inputs + quad
    }

    fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.degree) {
            return Err(Error::config(format!("NARMAX degree {} (must be 1 or 2)", self.degree)));
        }
        if self.ny + self.nx == 0 {
            return Err(Error::config("NARMAX needs output or input lags"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarmaxModel {
    pub order: NarmaxOrder,
    pub n_inputs: usize,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn regressors(order: &NarmaxOrder, y: &[f64], x: &Matrix, eps: &[f64], t: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    let ar_start = out.len();
    out.extend((1..=order.ny).map(|l| y[t - l]));
    out.extend((1..=order.ne).map(|l| eps[t - l]));
    let ar_end = out.len();
    for l in 0..order.nx {
        out.extend_from_slice(x.row(t - l));
    }
    if order.degree == 2 {
        for a in ar_start..ar_end {
            for b in a..ar_end {
                out.push(out[a] * out[b]);
            }
        }
    }
}

fn check_inputs(y: &[f64], x: &Matrix) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::shape(format!("{} outputs but {} input rows", y.len(), x.rows())));
    }
    Ok(())
}

/// Extended least squares: fit with the current residual estimates, refresh
/// the residuals from the fit, refit; stops when no coefficient moves by more
/// than [`ELS_TOLERANCE`] or after [`ELS_MAX_ITERATIONS`] fits.
pub fn narmax_fit(y: &[f64], x: &Matrix, order: NarmaxOrder) -> Result<NarmaxModel> {
    order.validate()?;
    check_inputs(y, x)?;
    let t0 = order.start();
    if y.len() <= t0 + 1 {
        return Err(Error::config(format!(
            "{} samples cannot fit lags starting at {t0}",
            y.len()
        )));
    }
    let rows = y.len() - t0;
    let terms = order.term_count(x.cols());
    let target = Matrix::new(rows, 1, y[t0..].to_vec())?;
    let mut eps = vec![0.0; y.len()];
    let mut theta: Vec<f64> = Vec::new();
    let mut phi = Vec::with_capacity(terms);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < ELS_MAX_ITERATIONS {
        iterations += 1;
        let mut design = Vec::with_capacity(rows * terms);
        for t in t0..y.len() {
            regressors(&order, y, x, &eps, t, &mut phi);
            design.extend_from_slice(&phi);
        }
        let a = Matrix::new(rows, terms, design)?;
        let next = least_squares(&a, &target)?.into_vec();
        let change = theta.iter().zip(&next).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let first = theta.is_empty();
        theta = next;
        for (i, t) in (t0..y.len()).enumerate() {
            let fitted: f64 = a.row(i).iter().zip(&theta).map(|(p, c)| p * c).sum();
            eps[t] = y[t] - fitted;
        }
        if order.ne == 0 || (!first && change < ELS_TOLERANCE) {
            converged = true;
            break;
        }
    }
    Ok(NarmaxModel {
        order,
        n_inputs: x.cols(),
        coefficients: theta,
        converged,
        iterations,
    })
}

impl NarmaxModel {
    /// One-step-ahead prediction of `y[t]` from observed history, with all
    /// noise terms set to zero.
    pub fn predict_at(&self, y: &[f64], x: &Matrix, t: usize) -> Result<f64> {
        check_inputs(y, x)?;
        if x.cols() != self.n_inputs {
            return Err(Error::schema(format!(
                "model has {} inputs, got {}",
                self.n_inputs,
                x.cols()
            )));
        }
        if t < self.order.start() || t >= y.len() {
            return Err(Error::config(format!("cannot predict row {t} of {}", y.len())));
        }
        let eps = vec![0.0; y.len()];
        let mut phi = Vec::new();
        regressors(&self.order, y, x, &eps, t, &mut phi);
        Ok(phi.iter().zip(&self.coefficients).map(|(p, c)| p * c).sum())
    }

    pub fn predict_range(&self, y: &[f64], x: &Matrix, rows: Range<usize>) -> Result<Vec<f64>> {
        rows.map(|t| self.predict_at(y, x, t)).collect()
    }
}
