//! Per-fold training and prediction: normalize on the fold's training rows,
//! select features, fit, and forecast in original units.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::narmax::{narmax_fit, NarmaxModel, NarmaxOrder};
use super::registry::{build_with, ArchSizes, ModelId, ModelSpec};
use crate::dataio::{fit_normalizer, NormalizationParams, TimeSeriesTable, TARGET};
use crate::error::{Error, Result};
use crate::featsel::{run_selector, FeatureMask, SelectionData, SelectorConfig, SelectorKind};
use crate::neural::{train, Network, TrainConfig, TrainingMeta};
use crate::numkernel::{Matrix, RngState};
use crate::splits::{initial_division, walk_forward_folds, windowize_targets, Fold, SplitPlan};

/// Generator stream used by the selector of a fold.
pub const SELECTOR_STREAM: u64 = 1;
/// Generator stream used by network training within a fold.
pub const TRAIN_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NarmaxGrid {
    pub lags: Vec<usize>,
    pub degrees: Vec<u8>,
}

impl Default for NarmaxGrid {
    fn default() -> Self {
        NarmaxGrid {
            lags: vec![1, 7, 14],
            degrees: vec![1, 2],
        }
    }
}

/// Everything needed to turn a registry id into trained fold models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sizes: ArchSizes,
    pub train: TrainConfig,
    pub selector: SelectorConfig,
    pub narmax: NarmaxGrid,
    /// Validation rows before each test block; `None` uses the 10% block of
    /// the initial division.
    pub val_len: Option<usize>,
    pub test_len: usize,
    /// Train a fresh model every this many folds and reuse it in between.
    pub retrain_every: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sizes: ArchSizes::default(),
            train: TrainConfig::default(),
            selector: SelectorConfig::default(),
            narmax: NarmaxGrid::default(),
            val_len: None,
            test_len: 7,
            retrain_every: 1,
        }
    }
}

impl PipelineConfig {
    pub fn spec(&self, id: ModelId) -> Result<ModelSpec> {
        build_with(id, &self.sizes, &self.train, self.selector.k)
    }

    pub fn plan(&self, n_rows: usize) -> Result<SplitPlan> {
        let val_len = match self.val_len {
            Some(v) => v,
            None => initial_division(n_rows)?.validation.len(),
        };
        walk_forward_folds(n_rows, val_len, self.test_len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.retrain_every == 0 || self.test_len == 0 {
            return Err(Error::config("retrain_every and test_len must be positive"));
        }
        if self.narmax.lags.is_empty() || self.narmax.degrees.is_empty() {
            return Err(Error::config("empty NARMAX grid"));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParameters {
    Network { params: Vec<f64> },
    Narmax { model: NarmaxModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: u64,
    pub fold: Fold,
    pub training: Option<TrainingMeta>,
    /// Validation MSE of every NARMAX structure tried, in grid order.
    pub narmax_grid: Vec<(NarmaxOrder, f64)>,
}

/// A fitted model with the preprocessing it was trained under; serializes as
/// the on-disk bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub mask: FeatureMask,
    pub normalizer: NormalizationParams,
    pub parameters: ModelParameters,
    pub metadata: ModelMeta,
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rows of history needed before the forecast row.
    pub fn history_len(&self) -> usize {
        match (&self.parameters, &self.spec.network) {
            (ModelParameters::Narmax { model }, _) => model.order.start().max(1),
            (_, Some(net)) => net.window,
            _ => 0,
        }
    }
}

pub fn bundle_file_name(id: ModelId, seed: u64, fold: usize) -> String {
    format!("{id}_seed{seed}_fold{fold}.json")
}

/// Masks shared between models that run the same selector on the same fold
/// with the same generator.
#[derive(Debug, Default)]
pub struct MaskCache {
    masks: Mutex<HashMap<(SelectorKind, u64, usize, usize), FeatureMask>>,
}

impl MaskCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.masks.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mask for `kind` fitted on the lagged design over the fold's training rows
/// of an already normalized table.
pub fn fold_mask(
    kind: SelectorKind,
    normalized: &TimeSeriesTable,
    fold: &Fold,
    config: &SelectorConfig,
    rng: &RngState,
) -> Result<FeatureMask> {
    if kind == SelectorKind::All {
        return Ok(FeatureMask::all());
    }
    let data = SelectionData::lagged(normalized, fold.train.clone())?;
    run_selector(kind, &data, config, &rng.fork(SELECTOR_STREAM))
}

fn cached_mask(
    kind: SelectorKind,
    normalized: &TimeSeriesTable,
    fold: &Fold,
    config: &SelectorConfig,
    rng: &RngState,
    cache: Option<&MaskCache>,
) -> Result<FeatureMask> {
    let Some(cache) = cache else {
        return fold_mask(kind, normalized, fold, config, rng);
    };
    let key = (kind, rng.seed(), fold.train.start, fold.train.end);
    if let Some(m) = cache.masks.lock().expect("cache lock").get(&key) {
        return Ok(m.clone());
    }
    let mask = fold_mask(kind, normalized, fold, config, rng)?;
    cache.masks.lock().expect("cache lock").insert(key, mask.clone());
    Ok(mask)
}

/// Trains `spec` on one fold. Only rows before `fold.test.start` influence
/// the result: the normalizer and selector see the training rows, the
/// network additionally uses the validation rows for early stopping.
pub fn train_model(
    spec: &ModelSpec,
    table: &TimeSeriesTable,
    fold: &Fold,
    config: &PipelineConfig,
    rng: &RngState,
) -> Result<TrainedModel> {
    train_model_cached(spec, table, fold, config, rng, None)
}

pub fn train_model_cached(
    spec: &ModelSpec,
    table: &TimeSeriesTable,
    fold: &Fold,
    config: &PipelineConfig,
    rng: &RngState,
    cache: Option<&MaskCache>,
) -> Result<TrainedModel> {
    let run = || -> Result<TrainedModel> {
        if fold.test.start > table.len() || fold.validation.end != fold.test.start {
            return Err(Error::config(format!(
                "fold {fold:?} does not fit a {}-row table",
                table.len()
            )));
        }
        let normalizer = fit_normalizer(table, fold.train.clone())?;
        let normalized = normalizer.apply(table)?;
        let mask = cached_mask(spec.selector, &normalized, fold, &config.selector, rng, cache)?;
        let mut metadata = ModelMeta {
            seed: rng.seed(),
            fold: fold.clone(),
            training: None,
            narmax_grid: Vec::new(),
        };
        let parameters = match &spec.network {
            None => {
                let (model, grid) = fit_narmax(&normalized, fold, &config.narmax)?;
                metadata.narmax_grid = grid;
                ModelParameters::Narmax { model }
            }
            Some(net) => {
                if net.features != mask.popcount() {
                    return Err(Error::schema(format!(
                        "network expects {} features, mask selects {}",
                        net.features,
                        mask.popcount()
                    )));
                }
                let w = net.window;
                if fold.train.end <= w + 1 {
                    return Err(Error::config(format!("window {w} leaves no training samples")));
                }
                let data = windowize_targets(&normalized, &mask, w, w..fold.validation.end)?;
                let train_set = data.subset(fold.train.clone());
                let validation = data.subset(fold.validation.clone());
                let trained = train(net, &train_set, &validation, &spec.train, &rng.fork(TRAIN_STREAM))?;
                metadata.training = Some(trained.meta);
                ModelParameters::Network { params: trained.params }
            }
        };
        Ok(TrainedModel {
            spec: spec.clone(),
            mask,
            normalizer,
            parameters,
            metadata,
        })
    };
    run().map_err(|e| e.in_model(spec.id.to_string()))
}

/// Inputs for NARMAX: row `t` holds the features of row `t - 1` (row 0 is
/// a copy of row 0, never used by a fitted order).
fn narmax_inputs(normalized: &TimeSeriesTable) -> Result<(Vec<f64>, Matrix)> {
    let full = normalized.feature_matrix()?;
    let y = normalized.target()?.to_vec();
    let mut values = Vec::with_capacity(full.rows() * full.cols());
    for t in 0..full.rows() {
        values.extend_from_slice(full.row(t.saturating_sub(1)));
    }
    Ok((y, Matrix::new(full.rows(), full.cols(), values)?))
}

fn fit_narmax(
    normalized: &TimeSeriesTable,
    fold: &Fold,
    grid: &NarmaxGrid,
) -> Result<(NarmaxModel, Vec<(NarmaxOrder, f64)>)> {
    let (y, x) = narmax_inputs(normalized)?;
    let history = fold.validation.end;
    let train_end = fold.train.end;
    let y_train = &y[..train_end];
    let x_train = x.slice_rows(0..train_end);
    let y_hist = &y[..history];
    let x_hist = x.slice_rows(0..history);
    let mut scores = Vec::new();
    let mut best: Option<(NarmaxOrder, f64)> = None;
    for &lag in &grid.lags {
        for &degree in &grid.degrees {
            let order = NarmaxOrder {
                ny: lag,
                nx: 1,
                ne: lag,
                degree,
            };
            if order.start() + 2 >= train_end || order.start() > fold.validation.start {
                continue;
            }
            let model = narmax_fit(y_train, &x_train, order)?;
            let preds = model.predict_range(y_hist, &x_hist, fold.validation.clone())?;
            let mse = preds
                .iter()
                .zip(&y[fold.validation.clone()])
                .map(|(p, a)| (p - a).powi(2))
                .sum::<f64>()
                / preds.len().max(1) as f64;
            let mse = if mse.is_finite() { mse } else { f64::INFINITY };
            scores.push((order, mse));
            if best.is_none_or(|(_, b)| mse < b) {
                best = Some((order, mse));
            }
        }
    }
    let (order, _) = best.ok_or_else(|| Error::config("no NARMAX structure fits the fold"))?;
    Ok((narmax_fit(y_hist, &x_hist, order)?, scores))
}

fn target_range(model: &TrainedModel) -> Result<&crate::dataio::ColumnRange> {
    model.normalizer.column(TARGET)
}

/// One-step forecasts for target rows `rows` of `table`, in original units.
pub fn predict_rows(model: &TrainedModel, table: &TimeSeriesTable, rows: Range<usize>) -> Result<Vec<f64>> {
    if rows.end > table.len() || rows.start < model.history_len() {
        return Err(Error::schema(format!(
            "rows {rows:?} need {} rows of history in a {}-row table",
            model.history_len(),
            table.len()
        )));
    }
    let normalized = model.normalizer.apply(table)?;
    let target = target_range(model)?;
    let z = match &model.parameters {
        ModelParameters::Narmax { model: m } => {
            let (y, x) = narmax_inputs(&normalized)?;
            m.predict_range(&y, &x, rows)?
        }
        ModelParameters::Network { params } => {
            let spec = model
                .spec
                .network
                .as_ref()
                .ok_or_else(|| Error::schema("network parameters without a network"))?;
            if spec.features != model.mask.popcount() {
                return Err(Error::schema("mask does not match the network input width"));
            }
            let net = Network::new(spec)?;
            let data = windowize_targets(&normalized, &model.mask, spec.window, rows)?;
            data.inputs
                .iter()
                .map(|x| net.forward(params, x))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(z.into_iter().map(|v| target.invert(v)).collect())
}

/// Forecast for the day after the last row of `recent`.
pub fn predict(model: &TrainedModel, recent: &TimeSeriesTable) -> Result<f64> {
    let need = model.history_len();
    if recent.len() < need {
        return Err(Error::schema(format!(
            "{} rows given, model needs {need}",
            recent.len()
        )));
    }
    let normalized = model.normalizer.apply(recent)?;
    let target = target_range(model)?;
    let n = recent.len();
    let z = match &model.parameters {
        ModelParameters::Narmax { model: m } => {
            let (mut y, x) = narmax_inputs(&normalized)?;
            y.push(0.0);
            let mut values = x.into_vec();
            values.extend_from_slice(normalized.feature_matrix()?.row(n - 1));
            let x = Matrix::new(n + 1, m.n_inputs, values)?;
            m.predict_at(&y, &x, n)?
        }
        ModelParameters::Network { params } => {
            let spec = model
                .spec
                .network
                .as_ref()
                .ok_or_else(|| Error::schema("network parameters without a network"))?;
            let idx = model.mask.indices();
            if spec.features != idx.len() {
                return Err(Error::schema("mask does not match the network input width"));
            }
            let full = normalized.feature_matrix()?;
            let mut values = Vec::with_capacity(spec.window * idx.len());
            for r in n - spec.window..n {
                values.extend(idx.iter().map(|&j| full.get(r, j)));
            }
            Network::new(spec)?.forward(params, &Matrix::new(spec.window, idx.len(), values)?)?
        }
    };
    Ok(target.invert(z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldForecast {
    pub fold: usize,
    pub rows: Range<usize>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    /// Fold whose model produced these forecasts.
    pub trained_on: usize,
}

/// Walk-forward evaluation of one model: trains on every `retrain_every`-th
/// fold (generator forked by fold index) and forecasts each test block.
/// `on_model` sees each freshly trained model.
pub fn walk_forward(
    spec: &ModelSpec,
    table: &TimeSeriesTable,
    plan: &SplitPlan,
    config: &PipelineConfig,
    rng: &RngState,
    cache: Option<&MaskCache>,
    mut on_model: impl FnMut(usize, &TrainedModel) -> Result<()>,
) -> Result<Vec<FoldForecast>> {
    config.validate()?;
    let actual = table.target()?;
    let mut out = Vec::with_capacity(plan.folds.len());
    let mut current: Option<(usize, TrainedModel)> = None;
    for (j, fold) in plan.folds.iter().enumerate() {
        if j % config.retrain_every == 0 || current.is_none() {
            let model = train_model_cached(spec, table, fold, config, &rng.fork(j as u64), cache)?;
            on_model(j, &model)?;
            current = Some((j, model));
        }
        let (trained_on, model) = current.as_ref().expect("trained above");
        let predicted = predict_rows(model, table, fold.test.clone()).map_err(|e| e.in_model(spec.id.to_string()))?;
        out.push(FoldForecast {
            fold: j,
            rows: fold.test.clone(),
            actual: actual[fold.test.clone()].to_vec(),
            predicted,
            trained_on: *trained_on,
        });
    }
    Ok(out)
}
