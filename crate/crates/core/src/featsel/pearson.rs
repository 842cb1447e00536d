use super::data::SelectionData;
use super::mask::{top_k, FeatureMask, SelectorKind};
use crate::error::{Error, Result};

/// Sample correlation coefficient; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Top `k` features by absolute correlation with the target. Scores are the
/// signed coefficients.
pub fn pearson_select(data: &SelectionData, k: usize) -> Result<FeatureMask> {
    if data.len() < 2 {
        return Err(Error::config("correlation needs at least two rows"));
    }
    if data.y.iter().all(|&v| v == data.y[0]) {
        return Err(Error::Degenerate("constant target".into()));
    }
    if k > data.n_features() {
        return Err(Error::config(format!("k = {k} exceeds {} features", data.n_features())));
    }
    let rho: Vec<f64> = (0..data.n_features())
        .map(|j| pearson(&data.x.col(j), &data.y))
        .collect();
    let abs: Vec<f64> = rho.iter().map(|r| r.abs()).collect();
    Ok(FeatureMask::from_indices(&top_k(&abs, k), SelectorKind::Pc)?.with_scores(rho))
}
