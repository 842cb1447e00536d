//! One-dimensional ConvLSTM: the LSTM gate structure with the dense input and
//! recurrent products replaced by zero-padded ("same") convolutions over the
//! feature axis.
//!
//! Each time step's input is a row of `S * Cin` values (`S` positions with
//! `Cin` channels, position-major); hidden and cell states are `S x F`.
//! Flat parameter layout for `F` filters, odd kernel `K`:
//!
//! | block | shape |
//! |-------|-------|
//! | `wx`  | `4F x (K * Cin)` |
//! | `wh`  | `4F x (K * F)` |
//! | `peep`| `3F`, shared across positions |
//! | `b`   | `4F` |
//!
//! With `K = 1` the block layout coincides with [`super::lstm`] for `D = Cin`,
//! `H = F`, and every position runs an independent LSTM.

use super::lstm::{matvec_add, matvec_t_add, outer_add, CellOutput};
use crate::numkernel::sigmoid;

pub fn convlstm_param_count(channels: usize, filters: usize, kernel: usize) -> usize {
    4 * filters * kernel * channels + 4 * filters * kernel * filters + 3 * filters + 4 * filters
}

#[derive(Debug, Clone, Copy)]
pub struct ConvLstmWeights<'a> {
    pub channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub wx: &'a [f64],
    pub wh: &'a [f64],
    pub peep: &'a [f64],
    pub b: &'a [f64],
}

impl<'a> ConvLstmWeights<'a> {
    pub fn split(flat: &'a [f64], channels: usize, filters: usize, kernel: usize) -> Self {
        assert_eq!(flat.len(), convlstm_param_count(channels, filters, kernel));
        let (wx, rest) = flat.split_at(4 * filters * kernel * channels);
        let (wh, rest) = rest.split_at(4 * filters * kernel * filters);
        let (peep, b) = rest.split_at(3 * filters);
        ConvLstmWeights {
            channels,
            filters,
            kernel,
            wx,
            wh,
            peep,
            b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvLstmCache {
    pub steps: usize,
    pub positions: usize,
    pub x: Vec<f64>,
    /// `(T + 1) x S x F`, row 0 zeros.
    pub hs: Vec<f64>,
    pub cs: Vec<f64>,
    /// `T x S x 4F`.
    pub gates: Vec<f64>,
    pub cell_out: Vec<f64>,
    pub mode: CellOutput,
}

impl ConvLstmCache {
    /// Final hidden state, `S * F` values.
    pub fn last_h(&self) -> &[f64] {
        let n = self.hs.len() / (self.steps + 1);
        &self.hs[self.steps * n..]
    }
}

/// Gathers the `K` rows centred on position `s` of an `S x width` map into
/// `patch`, zero outside the map.
fn gather(patch: &mut [f64], map: &[f64], s: usize, positions: usize, width: usize, kernel: usize) {
    let pad = kernel / 2;
    for k in 0..kernel {
        let dst = &mut patch[k * width..(k + 1) * width];
        match (s + k).checked_sub(pad) {
            Some(p) if p < positions => dst.copy_from_slice(&map[p * width..(p + 1) * width]),
            _ => dst.iter_mut().for_each(|v| *v = 0.0),
        }
    }
}

fn scatter(map: &mut [f64], patch: &[f64], s: usize, positions: usize, width: usize, kernel: usize) {
    let pad = kernel / 2;
    for k in 0..kernel {
        if let Some(p) = (s + k).checked_sub(pad) {
            if p < positions {
                for (m, v) in map[p * width..(p + 1) * width]
                    .iter_mut()
                    .zip(&patch[k * width..(k + 1) * width])
                {
                    *m += v;
                }
            }
        }
    }
}

/// Forward pass over `steps` rows of `positions * channels` inputs.
pub fn convlstm_forward_flat(
    w: ConvLstmWeights<'_>,
    seq: &[f64],
    steps: usize,
    positions: usize,
    mode: CellOutput,
) -> ConvLstmCache {
    let (cin, f, k) = (w.channels, w.filters, w.kernel);
    let sf = positions * f;
    debug_assert_eq!(seq.len(), steps * positions * cin);
    let mut hs = vec![0.0; (steps + 1) * sf];
    let mut cs = vec![0.0; (steps + 1) * sf];
    let mut gates = vec![0.0; steps * positions * 4 * f];
    let mut cell_out = vec![0.0; steps * sf];
    let mut xpatch = vec![0.0; k * cin];
    let mut hpatch = vec![0.0; k * f];
    let mut pre = vec![0.0; 4 * f];
    for t in 0..steps {
        let x = &seq[t * positions * cin..(t + 1) * positions * cin];
        for s in 0..positions {
            gather(&mut xpatch, x, s, positions, cin, k);
            gather(&mut hpatch, &hs[t * sf..(t + 1) * sf], s, positions, f, k);
            pre.copy_from_slice(w.b);
            matvec_add(&mut pre, w.wx, &xpatch);
            matvec_add(&mut pre, w.wh, &hpatch);
            let gt = &mut gates[(t * positions + s) * 4 * f..(t * positions + s + 1) * 4 * f];
            for j in 0..f {
                let c_prev = cs[t * sf + s * f + j];
                let fg = sigmoid(pre[j] + w.peep[j] * c_prev);
                let ig = sigmoid(pre[f + j] + w.peep[f + j] * c_prev);
                let og = sigmoid(pre[2 * f + j] + w.peep[2 * f + j] * c_prev);
                let g = pre[3 * f + j].tanh();
                let c = fg * c_prev + ig * g;
                let co = match mode {
                    CellOutput::Tanh => c.tanh(),
                    CellOutput::Identity => c,
                };
                gt[j] = fg;
                gt[f + j] = ig;
                gt[2 * f + j] = og;
                gt[3 * f + j] = g;
                cs[(t + 1) * sf + s * f + j] = c;
                cell_out[t * sf + s * f + j] = co;
                hs[(t + 1) * sf + s * f + j] = og * co;
            }
        }
    }
    ConvLstmCache {
        steps,
        positions,
        x: seq.to_vec(),
        hs,
        cs,
        gates,
        cell_out,
        mode,
    }
}

/// Backward pass for a loss that depends only on the final hidden state.
/// Accumulates parameter gradients into `grads`; returns the input gradient.
pub fn convlstm_backward_flat(
    w: ConvLstmWeights<'_>,
    cache: &ConvLstmCache,
    dh_last: &[f64],
    grads: &mut [f64],
) -> Vec<f64> {
    let (cin, f, k) = (w.channels, w.filters, w.kernel);
    let (steps, positions) = (cache.steps, cache.positions);
    let sf = positions * f;
    let (gwx, rest) = grads.split_at_mut(4 * f * k * cin);
    let (gwh, rest) = rest.split_at_mut(4 * f * k * f);
    let (gpeep, gb) = rest.split_at_mut(3 * f);

    let mut dx = vec![0.0; cache.x.len()];
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; sf];
    let mut xpatch = vec![0.0; k * cin];
    let mut hpatch = vec![0.0; k * f];
    let mut dxpatch = vec![0.0; k * cin];
    let mut dhpatch = vec![0.0; k * f];
    let mut da = vec![0.0; 4 * f];
    for t in (0..steps).rev() {
        let mut dh_prev = vec![0.0; sf];
        let mut dc_prev = vec![0.0; sf];
        let x = &cache.x[t * positions * cin..(t + 1) * positions * cin];
        let h_prev = &cache.hs[t * sf..(t + 1) * sf];
        for s in 0..positions {
            let gt = &cache.gates[(t * positions + s) * 4 * f..(t * positions + s + 1) * 4 * f];
            for j in 0..f {
                let idx = s * f + j;
                let c_prev = cache.cs[t * sf + idx];
                let co = cache.cell_out[t * sf + idx];
                let (fg, ig, og, g) = (gt[j], gt[f + j], gt[2 * f + j], gt[3 * f + j]);
                let dco = match cache.mode {
                    CellOutput::Tanh => 1.0 - co * co,
                    CellOutput::Identity => 1.0,
                };
                let dcj = dc[idx] + dh[idx] * og * dco;
                let da_f = dcj * c_prev * fg * (1.0 - fg);
                let da_i = dcj * g * ig * (1.0 - ig);
                let da_o = dh[idx] * co * og * (1.0 - og);
                let da_g = dcj * ig * (1.0 - g * g);
                da[j] = da_f;
                da[f + j] = da_i;
                da[2 * f + j] = da_o;
                da[3 * f + j] = da_g;
                gpeep[j] += da_f * c_prev;
                gpeep[f + j] += da_i * c_prev;
                gpeep[2 * f + j] += da_o * c_prev;
                dc_prev[idx] = dcj * fg + da_f * w.peep[j] + da_i * w.peep[f + j] + da_o * w.peep[2 * f + j];
            }
            for (g, a) in gb.iter_mut().zip(&da) {
                *g += a;
            }
            gather(&mut xpatch, x, s, positions, cin, k);
            gather(&mut hpatch, h_prev, s, positions, f, k);
            outer_add(gwx, &da, &xpatch);
            outer_add(gwh, &da, &hpatch);
            dxpatch.iter_mut().for_each(|v| *v = 0.0);
            dhpatch.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_add(&mut dxpatch, w.wx, &da);
            matvec_t_add(&mut dhpatch, w.wh, &da);
            scatter(
                &mut dx[t * positions * cin..(t + 1) * positions * cin],
                &dxpatch,
                s,
                positions,
                cin,
                k,
            );
            scatter(&mut dh_prev, &dhpatch, s, positions, f, k);
        }
        dh = dh_prev;
        dc = dc_prev;
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::lstm::{lstm_forward_flat, LstmWeights};
    use crate::numkernel::RngState;

    #[test]
    fn zero_parameters_zero_states() {
        let flat = vec![0.0; convlstm_param_count(1, 3, 3)];
        let w = ConvLstmWeights::split(&flat, 1, 3, 3);
        let mut rng = RngState::new(2);
        let seq: Vec<f64> = (0..4 * 5).map(|_| rng.normal()).collect();
        let cache = convlstm_forward_flat(w, &seq, 4, 5, CellOutput::Tanh);
        assert!(cache.hs.iter().chain(&cache.cs).all(|&v| v == 0.0));
    }

    #[test]
    fn width_one_matches_lstm_per_position() {
        let (cin, f, steps, positions) = (2, 3, 5, 4);
        let mut rng = RngState::new(17);
        let flat: Vec<f64> = (0..convlstm_param_count(cin, f, 1))
            .map(|_| rng.uniform_range(-0.7, 0.7))
            .collect();
        let seq: Vec<f64> = (0..steps * positions * cin).map(|_| rng.normal()).collect();
        let cache = convlstm_forward_flat(
            ConvLstmWeights::split(&flat, cin, f, 1),
            &seq,
            steps,
            positions,
            CellOutput::Tanh,
        );
        let lw = LstmWeights::split(&flat, cin, f);
        for s in 0..positions {
            let own: Vec<f64> = (0..steps)
                .flat_map(|t| seq[(t * positions + s) * cin..(t * positions + s + 1) * cin].to_vec())
                .collect();
            let l = lstm_forward_flat(lw, &own, steps, None, None, CellOutput::Tanh);
            for t in 0..steps {
                for j in 0..f {
                    let conv = cache.hs[(t + 1) * positions * f + s * f + j];
                    assert!((conv - l.h(t)[j]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = RngState::new(5);
        let flat: Vec<f64> = (0..convlstm_param_count(1, 2, 3))
            .map(|_| rng.uniform_range(-0.5, 0.5))
            .collect();
        let seq: Vec<f64> = (0..18).map(|_| rng.normal()).collect();
        let w = ConvLstmWeights::split(&flat, 1, 2, 3);
        let a = convlstm_forward_flat(w, &seq, 3, 6, CellOutput::Tanh);
        let b = convlstm_forward_flat(w, &seq, 3, 6, CellOutput::Tanh);
        assert_eq!(a.hs, b.hs);
    }
}
