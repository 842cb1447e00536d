use nalgebra::DMatrix;

use super::Matrix;
use crate::error::{Error, Result};

/// Minimum-norm least-squares solution of `a * beta = y`.
///
/// Uses an SVD pseudo-inverse; singular values below
/// `max(rows, cols) * sigma_max * f64::EPSILON` are treated as zero, so
/// rank-deficient systems get the minimum-norm minimizer.
pub fn least_squares(a: &Matrix, y: &Matrix) -> Result<Matrix> {
    if a.rows() == 0 || y.rows() != a.rows() {
        return Err(Error::shape(format!(
            "least squares with a {}x{} design and {} target rows",
            a.rows(),
            a.cols(),
            y.rows()
        )));
    }
    if a.cols() == 0 {
        return Ok(Matrix::zeros(0, y.cols()));
    }
    let am = DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let ym = DMatrix::from_row_slice(y.rows(), y.cols(), y.as_slice());
    let svd = am.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if sigma_max == 0.0 {
        return Ok(Matrix::zeros(a.cols(), y.cols()));
    }
    let tol = a.rows().max(a.cols()) as f64 * sigma_max * f64::EPSILON;
    let beta = svd
        .solve(&ym, tol)
        .map_err(|e| Error::shape(format!("least squares: {e}")))?;
    let mut values = Vec::with_capacity(beta.nrows() * beta.ncols());
    for r in 0..beta.nrows() {
        for c in 0..beta.ncols() {
            values.push(beta[(r, c)]);
        }
    }
    Matrix::new(beta.nrows(), beta.ncols(), values)
}
