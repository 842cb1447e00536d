//! Layer stacks over a single flat parameter vector.
//!
//! Activations flow between layers as row-major `T x C` maps (time steps by
//! channels). The network must end in a `1 x 1` map, the price forecast.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::convlstm::{
    convlstm_backward_flat, convlstm_forward_flat, convlstm_param_count, ConvLstmCache, ConvLstmWeights,
};
use super::lstm::{lstm_backward_flat, lstm_forward_flat, lstm_param_count, CellOutput, LstmCache, LstmWeights};
use crate::error::{Error, Result};
use crate::numkernel::{Activation, Matrix, RngState};

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LayerSpec {
    /// Emits the last hidden state (`1 x units`) unless `sequences` is set.
    Lstm {
        units: usize,
        #[serde(default)]
        sequences: bool,
    },
    Dense {
        units: usize,
        activation: Activation,
    },
    /// Valid convolution along time.
    Conv1d {
        filters: usize,
        kernel: usize,
        activation: Activation,
    },
    MaxPool {
        width: usize,
    },
    Flatten,
    /// Tiles a `1 x C` vector over `steps` time steps.
    Repeat {
        steps: usize,
    },
    /// Convolution over the feature axis; emits the final hidden state
    /// flattened to `1 x (positions * filters)`.
    ConvLstm {
        filters: usize,
        kernel: usize,
        #[serde(default = "one")]
        channels: usize,
    },
}

impl LayerSpec {
    pub fn lstm(units: usize) -> Self {
        LayerSpec::Lstm {
            units,
            sequences: false,
        }
    }

    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec::Dense { units, activation }
    }

    fn out_shape(&self, (t, c): (usize, usize)) -> Result<(usize, usize)> {
        let bad = |msg: String| Err(Error::shape(msg));
        match *self {
            LayerSpec::Lstm { units, sequences } => {
                if units == 0 {
                    return bad("LSTM with 0 units".into());
                }
                Ok((if sequences { t } else { 1 }, units))
            }
            LayerSpec::Dense { units, .. } => {
                if units == 0 {
                    return bad("dense layer with 0 units".into());
                }
                Ok((t, units))
            }
            LayerSpec::Conv1d { filters, kernel, .. } => {
                if filters == 0 || kernel == 0 || kernel > t {
                    return bad(format!("conv1d kernel {kernel} over sequence of length {t}"));
                }
                Ok((t - kernel + 1, filters))
            }
            LayerSpec::MaxPool { width } => {
                if width == 0 || width > t {
                    return bad(format!("max-pool width {width} over sequence of length {t}"));
                }
                Ok((t / width, c))
            }
            LayerSpec::Flatten => Ok((1, t * c)),
            LayerSpec::Repeat { steps } => {
                if t != 1 || steps == 0 {
                    return bad(format!("repeat needs a 1 x C input, got {t} x {c}"));
                }
                Ok((steps, c))
            }
            LayerSpec::ConvLstm {
                filters,
                kernel,
                channels,
            } => {
                if filters == 0 || kernel % 2 == 0 || channels == 0 || c % channels != 0 {
                    return bad(format!(
                        "convlstm with {filters} filters, kernel {kernel} (must be odd), {channels} channels over {c} inputs"
                    ));
                }
                Ok((1, (c / channels) * filters))
            }
        }
    }

    fn param_count(&self, (_, c): (usize, usize)) -> usize {
        match *self {
            LayerSpec::Lstm { units, .. } => lstm_param_count(c, units),
            LayerSpec::Dense { units, .. } => units * c + units,
            LayerSpec::Conv1d { filters, kernel, .. } => filters * kernel * c + filters,
            LayerSpec::ConvLstm {
                filters,
                kernel,
                channels,
            } => convlstm_param_count(channels, filters, kernel),
            LayerSpec::MaxPool { .. } | LayerSpec::Flatten | LayerSpec::Repeat { .. } => 0,
        }
    }

    /// Half-width of the uniform initialization range.
    fn init_scale(&self, (_, c): (usize, usize)) -> f64 {
        match *self {
            LayerSpec::Lstm { units, .. } => 1.0 / (units as f64).sqrt(),
            LayerSpec::ConvLstm { filters, .. } => 1.0 / (filters as f64).sqrt(),
            LayerSpec::Dense { .. } => 1.0 / (c as f64).sqrt(),
            LayerSpec::Conv1d { kernel, .. } => 1.0 / ((kernel * c) as f64).sqrt(),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub window: usize,
    pub features: usize,
    #[serde(default)]
    pub cell_output: CellOutput,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>, window: usize, features: usize) -> Self {
        NetworkSpec {
            layers,
            window,
            features,
            cell_output: CellOutput::default(),
        }
    }

    /// Input shape followed by each layer's output shape.
    pub fn shapes(&self) -> Result<Vec<(usize, usize)>> {
        if self.window == 0 || self.features == 0 {
            return Err(Error::shape(format!("input shape {} x {}", self.window, self.features)));
        }
        let mut shapes = vec![(self.window, self.features)];
        for (i, layer) in self.layers.iter().enumerate() {
            let next = layer
                .out_shape(*shapes.last().expect("nonempty"))
                .map_err(|e| Error::shape(format!("layer {i}: {e}")))?;
            shapes.push(next);
        }
        let last = *shapes.last().expect("nonempty");
        if last != (1, 1) {
            return Err(Error::shape(format!(
                "network must end in a single output, ends in {} x {}",
                last.0, last.1
            )));
        }
        Ok(shapes)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(Network::new(self)?.param_count())
    }
}

#[derive(Debug)]
enum Cache {
    Lstm(LstmCache),
    Dense { x: Vec<f64>, y: Vec<f64> },
    Conv { x: Vec<f64>, y: Vec<f64> },
    Pool { argmax: Vec<usize>, len: usize },
    Reshape,
    Repeat,
    ConvLstm(ConvLstmCache),
}

/// A validated [`NetworkSpec`] with its parameter layout.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    shapes: Vec<(usize, usize)>,
    offsets: Vec<Range<usize>>,
}

impl Network {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut offsets = Vec::with_capacity(spec.layers.len());
        let mut at = 0;
        for (layer, &shape) in spec.layers.iter().zip(&shapes) {
            let n = layer.param_count(shape);
            offsets.push(at..at + n);
            at += n;
        }
        Ok(Network {
            spec: spec.clone(),
            shapes,
            offsets,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.offsets.last().map_or(0, |r| r.end)
    }

    /// Parameter range owned by layer `i`.
    pub fn layer_params(&self, i: usize) -> Range<usize> {
        self.offsets[i].clone()
    }

    /// Uniform initialization, layer by layer in parameter order.
    pub fn init_params(&self, rng: &mut RngState) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let a = layer.init_scale(self.shapes[i]);
            for p in &mut params[self.offsets[i].clone()] {
                *p = rng.uniform_range(-a, a);
            }
        }
        params
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if (input.rows(), input.cols()) != (self.spec.window, self.spec.features) {
            return Err(Error::shape(format!(
                "input window {} x {}, network expects {} x {}",
                input.rows(),
                input.cols(),
                self.spec.window,
                self.spec.features
            )));
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], input: &Matrix) -> Result<f64> {
        self.check_input(input)?;
        if params.len() != self.param_count() {
            return Err(Error::shape(format!(
                "{} parameters, network has {}",
                params.len(),
                self.param_count()
            )));
        }
        Ok(self.forward_cached(params, input.as_slice()).0)
    }

    fn forward_cached(&self, params: &[f64], input: &[f64]) -> (f64, Vec<Cache>) {
        let mode = self.spec.cell_output;
        let mut x = input.to_vec();
        let mut caches = Vec::with_capacity(self.spec.layers.len());
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let (t, c) = self.shapes[i];
            let (t_out, c_out) = self.shapes[i + 1];
            let p = &params[self.offsets[i].clone()];
            let (y, cache) = match *layer {
                LayerSpec::Lstm { units, sequences } => {
                    let cache = lstm_forward_flat(LstmWeights::split(p, c, units), &x, t, None, None, mode);
                    let y = if sequences {
                        cache.hs[units..].to_vec()
                    } else {
                        cache.h(t - 1).to_vec()
                    };
                    (y, Cache::Lstm(cache))
                }
                LayerSpec::Dense { units, activation } => {
                    let (w, b) = p.split_at(units * c);
                    let mut y = vec![0.0; t * units];
                    for s in 0..t {
                        let xs = &x[s * c..(s + 1) * c];
                        for u in 0..units {
                            let z = b[u] + dot(&w[u * c..(u + 1) * c], xs);
                            y[s * units + u] = activation.apply(z);
                        }
                    }
                    (y.clone(), Cache::Dense { x, y })
                }
                LayerSpec::Conv1d {
                    filters,
                    kernel,
                    activation,
                } => {
                    let (w, b) = p.split_at(filters * kernel * c);
                    let mut y = vec![0.0; t_out * filters];
                    for s in 0..t_out {
                        let patch = &x[s * c..(s + kernel) * c];
                        for f in 0..filters {
                            let z = b[f] + dot(&w[f * kernel * c..(f + 1) * kernel * c], patch);
                            y[s * filters + f] = activation.apply(z);
                        }
                    }
                    (y.clone(), Cache::Conv { x, y })
                }
                LayerSpec::MaxPool { width } => {
                    let mut y = vec![0.0; t_out * c];
                    let mut argmax = vec![0; t_out * c];
                    for s in 0..t_out {
                        for ch in 0..c {
                            let mut best = s * width * c + ch;
                            for u in 1..width {
                                let idx = (s * width + u) * c + ch;
                                if x[idx] > x[best] {
                                    best = idx;
                                }
                            }
                            y[s * c + ch] = x[best];
                            argmax[s * c + ch] = best;
                        }
                    }
                    (y, Cache::Pool { argmax, len: x.len() })
                }
                LayerSpec::Flatten => (x, Cache::Reshape),
                LayerSpec::Repeat { steps } => {
                    let y = x.iter().copied().cycle().take(steps * c).collect();
                    (y, Cache::Repeat)
                }
                LayerSpec::ConvLstm {
                    filters,
                    kernel,
                    channels,
                } => {
                    let w = ConvLstmWeights::split(p, channels, filters, kernel);
                    let cache = convlstm_forward_flat(w, &x, t, c / channels, mode);
                    (cache.last_h().to_vec(), Cache::ConvLstm(cache))
                }
            };
            debug_assert_eq!(y.len(), t_out * c_out);
            caches.push(cache);
            x = y;
        }
        (x[0], caches)
    }

    /// Squared error `(f(x) - target)^2` for one sample. Its parameter
    /// gradient is added to `grads`.
    pub fn loss_and_grad(&self, params: &[f64], input: &Matrix, target: f64, grads: &mut [f64]) -> Result<f64> {
        self.check_input(input)?;
        Ok(self.sample_grad(params, input.as_slice(), target, 1.0, grads))
    }

    /// Adds `scale * d/dθ (f(x) - y)^2` to `grads`; returns the unscaled loss.
    pub(crate) fn sample_grad(&self, params: &[f64], input: &[f64], target: f64, scale: f64, grads: &mut [f64]) -> f64 {
        let (pred, caches) = self.forward_cached(params, input);
        let err = pred - target;
        let mut dy = vec![2.0 * err * scale];
        for (i, (layer, cache)) in self.spec.layers.iter().zip(caches).enumerate().rev() {
            let (t, c) = self.shapes[i];
            let (t_out, _) = self.shapes[i + 1];
            let range = self.offsets[i].clone();
            let p = &params[range.clone()];
            let g = &mut grads[range];
            dy = match (layer, cache) {
                (&LayerSpec::Lstm { units, sequences }, Cache::Lstm(cache)) => {
                    let dh = if sequences {
                        dy
                    } else {
                        let mut dh = vec![0.0; t * units];
                        dh[(t - 1) * units..].copy_from_slice(&dy);
                        dh
                    };
                    lstm_backward_flat(LstmWeights::split(p, c, units), &cache, &dh, g)
                }
                (&LayerSpec::Dense { units, activation }, Cache::Dense { x, y }) => {
                    let (w, _) = p.split_at(units * c);
                    let (gw, gb) = g.split_at_mut(units * c);
                    let mut dx = vec![0.0; t * c];
                    for s in 0..t {
                        for u in 0..units {
                            let dz = dy[s * units + u] * activation.derivative_from_output(y[s * units + u]);
                            if dz == 0.0 {
                                continue;
                            }
                            gb[u] += dz;
                            axpy(&mut gw[u * c..(u + 1) * c], dz, &x[s * c..(s + 1) * c]);
                            axpy(&mut dx[s * c..(s + 1) * c], dz, &w[u * c..(u + 1) * c]);
                        }
                    }
                    dx
                }
                (
                    &LayerSpec::Conv1d {
                        filters,
                        kernel,
                        activation,
                    },
                    Cache::Conv { x, y },
                ) => {
                    let (w, _) = p.split_at(filters * kernel * c);
                    let (gw, gb) = g.split_at_mut(filters * kernel * c);
                    let mut dx = vec![0.0; t * c];
                    let span = kernel * c;
                    for s in 0..t_out {
                        for f in 0..filters {
                            let dz = dy[s * filters + f] * activation.derivative_from_output(y[s * filters + f]);
                            if dz == 0.0 {
                                continue;
                            }
                            gb[f] += dz;
                            axpy(&mut gw[f * span..(f + 1) * span], dz, &x[s * c..s * c + span]);
                            axpy(&mut dx[s * c..s * c + span], dz, &w[f * span..(f + 1) * span]);
                        }
                    }
                    dx
                }
                (LayerSpec::MaxPool { .. }, Cache::Pool { argmax, len }) => {
                    let mut dx = vec![0.0; len];
                    for (d, &a) in dy.iter().zip(&argmax) {
                        dx[a] += d;
                    }
                    dx
                }
                (LayerSpec::Flatten, Cache::Reshape) => dy,
                (LayerSpec::Repeat { .. }, Cache::Repeat) => {
                    let mut dx = vec![0.0; c];
                    for chunk in dy.chunks_exact(c) {
                        for (a, b) in dx.iter_mut().zip(chunk) {
                            *a += b;
                        }
                    }
                    dx
                }
                (
                    &LayerSpec::ConvLstm {
                        filters,
                        kernel,
                        channels,
                    },
                    Cache::ConvLstm(cache),
                ) => convlstm_backward_flat(ConvLstmWeights::split(p, channels, filters, kernel), &cache, &dy, g),
                _ => unreachable!("cache kind matches layer kind"),
            };
        }
        err * err
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
