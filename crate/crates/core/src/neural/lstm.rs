//! Peephole LSTM cell and its backward pass.
//!
//! Gate order in every block is forget, input, output, candidate. Flat
//! parameter layout for input size `D` and hidden size `H`:
//!
//! | block | shape |
//! |-------|-------|
//! | `wx`  | `4H x D` (rows `g*H + j`) |
//! | `wh`  | `4H x H` |
//! | `peep`| `3H` (forget, input, output; elementwise on `c_{t-1}`) |
//! | `b`   | `4H` |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{sigmoid, Matrix};

/// Output nonlinearity applied to the cell state when forming `h_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellOutput {
    /// `h_t = o_t * tanh(c_t)`.
    #[default]
    Tanh,
    /// `h_t = o_t * c_t`, no output activation.
    Identity,
}

pub fn lstm_param_count(d: usize, h: usize) -> usize {
    4 * h * d + 4 * h * h + 3 * h + 4 * h
}

/// Borrowed view of one LSTM's parameters inside a flat vector.
#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    pub d: usize,
    pub h: usize,
    pub wx: &'a [f64],
    pub wh: &'a [f64],
    pub peep: &'a [f64],
    pub b: &'a [f64],
}

impl<'a> LstmWeights<'a> {
    pub fn split(flat: &'a [f64], d: usize, h: usize) -> Self {
        assert_eq!(flat.len(), lstm_param_count(d, h), "lstm parameter block size");
        let (wx, rest) = flat.split_at(4 * h * d);
        let (wh, rest) = rest.split_at(4 * h * h);
        let (peep, b) = rest.split_at(3 * h);
        LstmWeights { d, h, wx, wh, peep, b }
    }
}

/// Owned LSTM parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden: usize,
    pub flat: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden: usize) -> Self {
        LstmParams {
            input_size,
            hidden,
            flat: vec![0.0; lstm_param_count(input_size, hidden)],
        }
    }

    pub fn weights(&self) -> LstmWeights<'_> {
        LstmWeights::split(&self.flat, self.input_size, self.hidden)
    }

    fn block(&mut self, offset: usize, len: usize) -> &mut [f64] {
        &mut self.flat[offset..offset + len]
    }

    /// Input weights of gate `g` (0 forget, 1 input, 2 output, 3 candidate), `H x D`.
    pub fn wx_mut(&mut self, g: usize) -> &mut [f64] {
        let (d, h) = (self.input_size, self.hidden);
        self.block(g * h * d, h * d)
    }

    pub fn wh_mut(&mut self, g: usize) -> &mut [f64] {
        let (d, h) = (self.input_size, self.hidden);
        self.block(4 * h * d + g * h * h, h * h)
    }

    /// Peephole of gate `g` in 0..3.
    pub fn peep_mut(&mut self, g: usize) -> &mut [f64] {
        let (d, h) = (self.input_size, self.hidden);
        self.block(4 * h * d + 4 * h * h + g * h, h)
    }

    pub fn b_mut(&mut self, g: usize) -> &mut [f64] {
        let (d, h) = (self.input_size, self.hidden);
        self.block(4 * h * d + 4 * h * h + 3 * h + g * h, h)
    }
}

/// Forward-pass record needed by the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub steps: usize,
    pub d: usize,
    pub h: usize,
    pub x: Vec<f64>,
    /// `(T + 1) x H`; row 0 is the initial state.
    pub hs: Vec<f64>,
    pub cs: Vec<f64>,
    /// `T x 4H` activated gates (f, i, o, g).
    pub gates: Vec<f64>,
    /// `T x H` cell output `tanh(c_t)` (or `c_t`).
    pub cell_out: Vec<f64>,
    pub mode: CellOutput,
}

impl LstmCache {
    pub fn h(&self, t: usize) -> &[f64] {
        &self.hs[(t + 1) * self.h..(t + 2) * self.h]
    }

    pub fn c(&self, t: usize) -> &[f64] {
        &self.cs[(t + 1) * self.h..(t + 2) * self.h]
    }

    pub fn gate(&self, t: usize, g: usize) -> &[f64] {
        let base = t * 4 * self.h + g * self.h;
        &self.gates[base..base + self.h]
    }
}

#[inline]
pub(super) fn matvec_add(out: &mut [f64], w: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut s = 0.0;
        for (a, b) in row.iter().zip(x) {
            s += a * b;
        }
        *o += s;
    }
}

/// `out += Wᵀ v` for `W` with `v.len()` rows.
#[inline]
pub(super) fn matvec_t_add(out: &mut [f64], w: &[f64], v: &[f64]) {
    let cols = out.len();
    for (row, &s) in w.chunks_exact(cols).zip(v) {
        if s == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += s * a;
        }
    }
}

/// `W += v xᵀ`.
#[inline]
pub(super) fn outer_add(w: &mut [f64], v: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &s) in w.chunks_exact_mut(cols).zip(v) {
        if s == 0.0 {
            continue;
        }
        for (a, b) in row.iter_mut().zip(x) {
            *a += s * b;
        }
    }
}

/// Runs the cell over a `T x D` sequence from initial states `h0`, `c0`
/// (zeros when `None`).
pub fn lstm_forward_flat(
    w: LstmWeights<'_>,
    seq: &[f64],
    steps: usize,
    h0: Option<&[f64]>,
    c0: Option<&[f64]>,
    mode: CellOutput,
) -> LstmCache {
    let (d, h) = (w.d, w.h);
    debug_assert_eq!(seq.len(), steps * d);
    let mut hs = vec![0.0; (steps + 1) * h];
    let mut cs = vec![0.0; (steps + 1) * h];
    if let Some(h0) = h0 {
        hs[..h].copy_from_slice(h0);
    }
    if let Some(c0) = c0 {
        cs[..h].copy_from_slice(c0);
    }
    let mut gates = vec![0.0; steps * 4 * h];
    let mut cell_out = vec![0.0; steps * h];
    let mut pre = vec![0.0; 4 * h];
    for t in 0..steps {
        let x = &seq[t * d..(t + 1) * d];
        pre.copy_from_slice(w.b);
        matvec_add(&mut pre, w.wx, x);
        {
            let h_prev = &hs[t * h..(t + 1) * h];
            matvec_add(&mut pre, w.wh, h_prev);
        }
        let (c_prev_all, c_next_all) = cs.split_at_mut((t + 1) * h);
        let c_prev = &c_prev_all[t * h..];
        let c_next = &mut c_next_all[..h];
        let gt = &mut gates[t * 4 * h..(t + 1) * 4 * h];
        for j in 0..h {
            let f = sigmoid(pre[j] + w.peep[j] * c_prev[j]);
            let i = sigmoid(pre[h + j] + w.peep[h + j] * c_prev[j]);
            let o = sigmoid(pre[2 * h + j] + w.peep[2 * h + j] * c_prev[j]);
            let g = pre[3 * h + j].tanh();
            let c = f * c_prev[j] + i * g;
            let co = match mode {
                CellOutput::Tanh => c.tanh(),
                CellOutput::Identity => c,
            };
            gt[j] = f;
            gt[h + j] = i;
            gt[2 * h + j] = o;
            gt[3 * h + j] = g;
            c_next[j] = c;
            cell_out[t * h + j] = co;
            hs[(t + 1) * h + j] = o * co;
        }
    }
    LstmCache {
        steps,
        d,
        h,
        x: seq.to_vec(),
        hs,
        cs,
        gates,
        cell_out,
        mode,
    }
}

/// Per-step hidden and cell states.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStates {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

/// Forward pass over a `T x D` window matrix.
pub fn lstm_forward(
    params: &LstmParams,
    sequence: &Matrix,
    h0: Option<&[f64]>,
    c0: Option<&[f64]>,
    mode: CellOutput,
) -> Result<LstmStates> {
    if sequence.cols() != params.input_size {
        return Err(Error::shape(format!(
            "sequence has {} features, LSTM expects {}",
            sequence.cols(),
            params.input_size
        )));
    }
    for s in [h0, c0].into_iter().flatten() {
        if s.len() != params.hidden {
            return Err(Error::shape(format!(
                "initial state of length {}, hidden size {}",
                s.len(),
                params.hidden
            )));
        }
    }
    let cache = lstm_forward_flat(params.weights(), sequence.as_slice(), sequence.rows(), h0, c0, mode);
    Ok(LstmStates {
        h: (0..cache.steps).map(|t| cache.h(t).to_vec()).collect(),
        c: (0..cache.steps).map(|t| cache.c(t).to_vec()).collect(),
    })
}

/// Backpropagation through time.
///
/// `dh_out` is `T x H`, the loss gradient with respect to each emitted hidden
/// state. Parameter gradients are accumulated into `grads` (same layout as
/// the flat parameters); the gradient with respect to the input sequence is
/// returned.
pub fn lstm_backward_flat(w: LstmWeights<'_>, cache: &LstmCache, dh_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
    let (d, h, steps) = (w.d, w.h, cache.steps);
    debug_assert_eq!(dh_out.len(), steps * h);
    let (gwx, rest) = grads.split_at_mut(4 * h * d);
    let (gwh, rest) = rest.split_at_mut(4 * h * h);
    let (gpeep, gb) = rest.split_at_mut(3 * h);

    let mut dx = vec![0.0; steps * d];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];
    for t in (0..steps).rev() {
        let c_prev = &cache.cs[t * h..(t + 1) * h];
        let h_prev = &cache.hs[t * h..(t + 1) * h];
        let gt = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let co = &cache.cell_out[t * h..(t + 1) * h];
        let mut dc_prev = vec![0.0; h];
        for j in 0..h {
            let (f, i, o, g) = (gt[j], gt[h + j], gt[2 * h + j], gt[3 * h + j]);
            let dh = dh_out[t * h + j] + dh_next[j];
            let d_o = dh * co[j];
            let dco = match cache.mode {
                CellOutput::Tanh => 1.0 - co[j] * co[j],
                CellOutput::Identity => 1.0,
            };
            let dc = dc_next[j] + dh * o * dco;
            let da_f = dc * c_prev[j] * f * (1.0 - f);
            let da_i = dc * g * i * (1.0 - i);
            let da_o = d_o * o * (1.0 - o);
            let da_g = dc * i * (1.0 - g * g);
            da[j] = da_f;
            da[h + j] = da_i;
            da[2 * h + j] = da_o;
            da[3 * h + j] = da_g;
            gpeep[j] += da_f * c_prev[j];
            gpeep[h + j] += da_i * c_prev[j];
            gpeep[2 * h + j] += da_o * c_prev[j];
            dc_prev[j] = dc * f + da_f * w.peep[j] + da_i * w.peep[h + j] + da_o * w.peep[2 * h + j];
        }
        for (g, a) in gb.iter_mut().zip(&da) {
            *g += a;
        }
        outer_add(gwx, &da, &cache.x[t * d..(t + 1) * d]);
        outer_add(gwh, &da, h_prev);
        matvec_t_add(&mut dx[t * d..(t + 1) * d], w.wx, &da);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        matvec_t_add(&mut dh_next, w.wh, &da);
        dc_next = dc_prev;
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::RngState;

    fn random_params(d: usize, h: usize, rng: &mut RngState) -> LstmParams {
        let mut p = LstmParams::zeros(d, h);
        p.flat.iter_mut().for_each(|v| *v = rng.uniform_range(-0.8, 0.8));
        p
    }

    #[test]
    fn zero_parameters_give_zero_states() {
        let p = LstmParams::zeros(3, 4);
        let mut rng = RngState::new(1);
        let seq = Matrix::new(6, 3, (0..18).map(|_| rng.normal()).collect()).unwrap();
        let s = lstm_forward(&p, &seq, None, None, CellOutput::Tanh).unwrap();
        assert!(s.h.iter().chain(&s.c).flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_by_hand() {
        // 1x1 cell, c0 = 0, h0 = 0.
        let mut p = LstmParams::zeros(1, 1);
        p.wx_mut(1)[0] = 0.7; // input gate
        p.b_mut(1)[0] = -0.2;
        p.wx_mut(3)[0] = 1.3; // candidate
        p.b_mut(3)[0] = 0.1;
        p.wx_mut(2)[0] = 0.4; // output gate
        p.wx_mut(0)[0] = -0.5; // forget gate (irrelevant with c0 = 0)
        let x = 0.9;
        let s = lstm_forward(&p, &Matrix::new(1, 1, vec![x]).unwrap(), None, None, CellOutput::Tanh).unwrap();
        let i1 = 1.0 / (1.0 + (-(0.7 * x - 0.2f64)).exp());
        let c1 = i1 * (1.3 * x + 0.1f64).tanh();
        let o1 = 1.0 / (1.0 + (-(0.4 * x)).exp());
        assert!((s.c[0][0] - c1).abs() < 1e-15);
        assert!((s.h[0][0] - o1 * c1.tanh()).abs() < 1e-15);
        let lit = lstm_forward(
            &p,
            &Matrix::new(1, 1, vec![x]).unwrap(),
            None,
            None,
            CellOutput::Identity,
        )
        .unwrap();
        assert!((lit.h[0][0] - o1 * c1).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_bounded() {
        let mut rng = RngState::new(4);
        let p = random_params(2, 5, &mut rng);
        let seq = Matrix::new(8, 2, (0..16).map(|_| 3.0 * rng.normal()).collect()).unwrap();
        let a = lstm_forward(&p, &seq, None, None, CellOutput::Tanh).unwrap();
        let b = lstm_forward(&p, &seq, None, None, CellOutput::Tanh).unwrap();
        assert_eq!(a, b);
        let cache = lstm_forward_flat(p.weights(), seq.as_slice(), 8, None, None, CellOutput::Tanh);
        for t in 0..8 {
            for g in 0..3 {
                assert!(cache.gate(t, g).iter().all(|&v| v > 0.0 && v < 1.0));
            }
            assert!(cache.gate(t, 3).iter().all(|&v| v > -1.0 && v < 1.0));
        }
    }

    #[test]
    fn shape_errors() {
        let p = LstmParams::zeros(3, 2);
        assert!(lstm_forward(&p, &Matrix::zeros(4, 2), None, None, CellOutput::Tanh).is_err());
        assert!(lstm_forward(&p, &Matrix::zeros(4, 3), Some(&[0.0; 3]), None, CellOutput::Tanh).is_err());
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let mut rng = RngState::new(8);
        let p = random_params(2, 3, &mut rng);
        let seq: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let cache = lstm_forward_flat(p.weights(), &seq, 5, None, None, CellOutput::Tanh);
        let mut grads = vec![0.0; p.flat.len()];
        let dx = lstm_backward_flat(p.weights(), &cache, &[0.0; 15], &mut grads);
        assert!(grads.iter().chain(&dx).all(|&g| g == 0.0));
    }

    #[test]
    fn zero_padded_input_column_has_zero_weight_gradient() {
        let mut rng = RngState::new(9);
        let (d, h, t) = (3, 4, 6);
        let p = random_params(d, h, &mut rng);
        // Column 2 is padding.
        let seq: Vec<f64> = (0..t * d)
            .map(|k| if k % d == 2 { 0.0 } else { rng.normal() })
            .collect();
        let cache = lstm_forward_flat(p.weights(), &seq, t, None, None, CellOutput::Tanh);
        let dh: Vec<f64> = (0..t * h).map(|_| rng.normal()).collect();
        let mut grads = vec![0.0; p.flat.len()];
        lstm_backward_flat(p.weights(), &cache, &dh, &mut grads);
        for row in 0..4 * h {
            assert_eq!(grads[row * d + 2], 0.0);
            assert_ne!(grads[row * d], 0.0);
        }
    }
}
