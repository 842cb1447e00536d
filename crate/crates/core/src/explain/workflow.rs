//! End-to-end explanation of a masked feature set: fit the normalizer and a
//! surrogate SVR on training rows, then explain chosen target days.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::export::{importance_ranking, Importance};
use super::shap::{explain_rows, BackgroundSet, ShapExplanation};
use super::surrogate::{fit_surrogate_svr, Surrogate, SurrogateGrid};
use crate::dataio::{fit_normalizer, FeatureId, TimeSeriesTable, TARGET};
use crate::error::{Error, Result};
use crate::featsel::{FeatureMask, SelectionData};
use crate::numkernel::{Matrix, RngState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub background: usize,
    pub n_coalitions: usize,
    /// Trailing share of the training rows held out to score the grid.
    pub validation_fraction: f64,
    pub grid: SurrogateGrid,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            background: 100,
            n_coalitions: 2048,
            validation_fraction: 0.2,
            grid: SurrogateGrid::default(),
        }
    }
}

/// Attributions are in target units; instance values are the raw feature
/// values of the day before each explained target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub features: Vec<String>,
    pub target_rows: Range<usize>,
    pub surrogate: Surrogate,
    pub explanations: Vec<ShapExplanation>,
    pub ranking: Vec<Importance>,
}

fn masked_lagged(table: &TimeSeriesTable, rows: Range<usize>, idx: &[usize]) -> Result<SelectionData> {
    let full = table.feature_matrix()?;
    let y = table.target()?;
    let mut values = Vec::with_capacity(rows.len() * idx.len());
    for t in rows.clone() {
        let prev = full.row(t - 1);
        values.extend(idx.iter().map(|&j| prev[j]));
    }
    SelectionData::new(Matrix::new(rows.len(), idx.len(), values)?, y[rows].to_vec())
}

/// Explains the one-day-ahead surrogate on targets `explain` (each needs a
/// preceding row). Only `train` rows shape the normalizer, the surrogate and
/// the background set.
pub fn explain_table(
    table: &TimeSeriesTable,
    mask: &FeatureMask,
    train: Range<usize>,
    explain: Range<usize>,
    config: &ExplainConfig,
    rng: &RngState,
) -> Result<ExplainReport> {
    if train.len() < 10 || explain.start == 0 || explain.end > table.len() || explain.is_empty() {
        return Err(Error::config(format!(
            "training rows {train:?} and explained rows {explain:?} do not fit a {}-row table",
            table.len()
        )));
    }
    let normalizer = fit_normalizer(table, train.clone())?;
    let norm = normalizer.apply(table)?;
    let idx = mask.indices();
    let fit = masked_lagged(&norm, train.start + 1..train.end, &idx)?;
    let (fit_train, fit_val) = fit.split(1.0 - config.validation_fraction)?;
    let surrogate = fit_surrogate_svr(&fit_train, &fit_val, &config.grid)?;
    let background = BackgroundSet::sample(&fit.x, config.background, &mut rng.fork(0))?;
    let instances = masked_lagged(&norm, explain.clone(), &idx)?;
    let model = |x: &[f64]| surrogate.predict_row(x);
    let mut explanations = explain_rows(&model, &instances.x, &background, config.n_coalitions, &rng.fork(1))?;

    let target = normalizer.column(TARGET)?;
    let width = if target.constant { 0.0 } else { target.max - target.min };
    let raw = table.feature_matrix()?;
    for (e, t) in explanations.iter_mut().zip(explain.clone()) {
        e.phi.iter_mut().for_each(|p| *p *= width);
        e.base = target.invert(e.base);
        e.prediction = target.invert(e.prediction);
        e.instance = idx.iter().map(|&j| raw.get(t - 1, j)).collect();
    }
    let features: Vec<String> = idx.iter().map(|&j| FeatureId::from_index(j).to_string()).collect();
    let ranking = importance_ranking(&explanations, &features);
    Ok(ExplainReport {
        features,
        target_rows: explain,
        surrogate,
        explanations,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_generate, SynthConfig};

    #[test]
    fn planted_dominant_feature_ranks_first() {
        let config = SynthConfig {
            relevant: vec![(FeatureId::from_index(34), 12.0), (FeatureId::from_index(16), 3.0)],
            ..SynthConfig::default()
        };
        let table = synth_generate(&mut RngState::new(3), 300, &config).unwrap().table;
        let mask = FeatureMask::from_indices(&[0, 5, 16, 20, 34, 40], crate::featsel::SelectorKind::Pc).unwrap();
        let cfg = ExplainConfig {
            background: 50,
            ..ExplainConfig::default()
        };
        let r = explain_table(&table, &mask, 0..240, 240..300, &cfg, &RngState::new(1)).unwrap();
        assert_eq!(r.explanations.len(), 60);
        assert_eq!(r.ranking[0].feature, "F35");
        assert_eq!(r.ranking[1].feature, "F17");
        for e in &r.explanations {
            let s: f64 = e.phi.iter().sum();
            assert!((s + e.base - e.prediction).abs() < 1e-6);
        }
        // Positive weight: above-average F35 days push the forecast up.
        let t = crate::explain::dependence_export(&r.explanations, &r.features, "F35", None).unwrap();
        let mean = t.rows.iter().map(|row| row.value).sum::<f64>() / t.rows.len() as f64;
        let hi: Vec<f64> = t
            .rows
            .iter()
            .filter(|row| row.value > mean)
            .map(|row| row.phi)
            .collect();
        let lo: Vec<f64> = t
            .rows
            .iter()
            .filter(|row| row.value < mean)
            .map(|row| row.phi)
            .collect();
        assert!(hi.iter().sum::<f64>() / hi.len() as f64 > lo.iter().sum::<f64>() / lo.len() as f64);
        let again = explain_table(&table, &mask, 0..240, 240..300, &cfg, &RngState::new(1)).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn rejects_bad_ranges() {
        let table = synth_generate(&mut RngState::new(3), 60, &SynthConfig::default())
            .unwrap()
            .table;
        let mask = FeatureMask::all();
        let cfg = ExplainConfig::default();
        assert!(explain_table(&table, &mask, 0..50, 0..10, &cfg, &RngState::new(1)).is_err());
        assert!(explain_table(&table, &mask, 0..50, 50..70, &cfg, &RngState::new(1)).is_err());
    }
}
