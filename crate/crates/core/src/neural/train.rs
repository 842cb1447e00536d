use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::network::{Network, NetworkSpec};
use crate::error::{Error, Result};
use crate::numkernel::{Matrix, RngState};
use crate::par;
use crate::splits::WindowedDataset;

/// Samples per gradient work unit. Fixed so that the summation order, and
/// hence the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub learning_rate: f64,
    /// Stream mixed into the caller's generator.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            batch_size: 32,
            patience: 20,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::config("epochs, batch size and patience must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    /// Epoch (1-based) whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
    /// Full training-subset MSE after each epoch.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedNetwork {
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    pub meta: TrainingMeta,
}

impl TrainedNetwork {
    pub fn predict(&self, input: &Matrix) -> Result<f64> {
        Network::new(&self.spec)?.forward(&self.params, input)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Mean squared error of `params` over a dataset.
pub fn dataset_mse(net: &Network, params: &[f64], data: &WindowedDataset) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let errs = par::map_indexed(data.len(), |i| {
        let pred = net.forward(params, &data.inputs[i]).expect("validated shapes");
        (pred - data.targets[i]).powi(2)
    });
    errs.iter().sum::<f64>() / data.len() as f64
}

/// Mean loss and gradient over the samples `batch`.
fn batch_gradient(net: &Network, params: &[f64], data: &WindowedDataset, batch: &[usize]) -> (f64, Vec<f64>) {
    let scale = 1.0 / batch.len() as f64;
    let chunks: Vec<&[usize]> = batch.chunks(GRAD_CHUNK).collect();
    let parts = par::map_slice(&chunks, |chunk| {
        let mut g = vec![0.0; params.len()];
        let mut loss = 0.0;
        for &i in chunk.iter() {
            loss += net.sample_grad(params, data.inputs[i].as_slice(), data.targets[i], scale, &mut g);
        }
        (loss, g)
    });
    let mut parts = parts.into_iter();
    let (mut loss, mut grads) = parts.next().expect("nonempty batch");
    for (l, g) in parts {
        loss += l;
        for (a, b) in grads.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (loss * scale, grads)
}

/// Minibatch Adam on MSE with early stopping on validation MSE; the
/// parameters with the best validation loss are returned. Without validation
/// samples the training loss drives early stopping.
pub fn train(
    spec: &NetworkSpec,
    train_set: &WindowedDataset,
    validation: &WindowedDataset,
    config: &TrainConfig,
    rng: &RngState,
) -> Result<TrainedNetwork> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::config("empty training set"));
    }
    let net = Network::new(spec)?;
    for x in train_set.inputs.iter().chain(&validation.inputs) {
        if (x.rows(), x.cols()) != (spec.window, spec.features) {
            return Err(Error::shape(format!(
                "sample window {} x {}, network expects {} x {}",
                x.rows(),
                x.cols(),
                spec.window,
                spec.features
            )));
        }
    }
    let base = rng.fork(config.seed);
    let mut init_rng = base.fork(0);
    let mut order_rng = base.fork(1);
    let mut params = net.init_params(&mut init_rng);
    let mut adam = AdamState::new(params.len(), config.learning_rate);

    let monitor = |p: &[f64]| {
        if validation.is_empty() {
            dataset_mse(&net, p, train_set)
        } else {
            dataset_mse(&net, p, validation)
        }
    };
    let mut best = (monitor(&params), params.clone(), 0usize);
    let mut meta = TrainingMeta {
        seed: base.seed(),
        epochs_run: 0,
        best_epoch: 0,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
    };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        order_rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            let (loss, grads) = batch_gradient(&net, &params, train_set, batch);
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    message: format!("non-finite loss {loss}"),
                });
            }
            adam_step(&mut adam, &mut params, &grads);
        }
        let train_loss = dataset_mse(&net, &params, train_set);
        if !train_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("non-finite training loss {train_loss}"),
            });
        }
        let val_loss = if validation.is_empty() {
            train_loss
        } else {
            dataset_mse(&net, &params, validation)
        };
        meta.train_loss.push(train_loss);
        meta.val_loss.push(val_loss);
        meta.epochs_run = epoch;
        if val_loss < best.0 {
            best = (val_loss, params.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    meta.best_epoch = best.2;
    Ok(TrainedNetwork {
        spec: spec.clone(),
        params: best.1,
        meta,
    })
}
