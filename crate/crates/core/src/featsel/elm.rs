use serde::{Deserialize, Serialize};

use super::data::SelectionData;
use crate::error::{Error, Result};
use crate::numkernel::{least_squares, Activation, Matrix, RngState};

pub const DEFAULT_HIDDEN: usize = 50;

/// Extreme learning machine: a frozen random hidden layer over all inputs and
/// a least-squares output layer. Masked-out inputs contribute nothing to the
/// hidden units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmModel {
    pub hidden: usize,
    pub activation: Activation,
    /// `hidden x inputs`.
    pub w1: Matrix,
    pub b: Vec<f64>,
    pub w2: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ElmModel {
    /// Draws the hidden layer from `rng`; output weights start at zero.
    pub fn random(inputs: usize, hidden: usize, rng: &mut RngState) -> Self {
        let w1 = (0..hidden * inputs).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let b = (0..hidden).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        ElmModel {
            hidden,
            activation: Activation::Sigmoid,
            w1: Matrix::new(hidden, inputs, w1).expect("finite draws"),
            b,
            w2: vec![0.0; hidden],
            mask: vec![true; inputs],
        }
    }

    fn hidden_matrix(&self, x: &Matrix, mask: &[bool]) -> Matrix {
        let active: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
        let mut h = Vec::with_capacity(x.rows() * self.hidden);
        for r in 0..x.rows() {
            let row = x.row(r);
            for u in 0..self.hidden {
                let w = self.w1.row(u);
                let z = self.b[u] + active.iter().map(|&j| w[j] * row[j]).sum::<f64>();
                h.push(self.activation.apply(z));
            }
        }
        Matrix::new(x.rows(), self.hidden, h).expect("bounded activations")
    }

    /// Refits the output weights on the masked inputs.
    pub fn refit(&mut self, mask: &[bool], data: &SelectionData) -> Result<()> {
        if mask.len() != self.w1.cols() || data.n_features() != self.w1.cols() {
            return Err(Error::shape(format!(
                "mask of {} and data of {} features for an ELM over {} inputs",
                mask.len(),
                data.n_features(),
                self.w1.cols()
            )));
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::config("ELM needs at least one input"));
        }
        let h = self.hidden_matrix(&data.x, mask);
        self.w2 = least_squares(&h, &Matrix::column(&data.y))?.into_vec();
        self.mask = mask.to_vec();
        Ok(())
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let h = self.hidden_matrix(x, &self.mask);
        (0..h.rows())
            .map(|r| h.row(r).iter().zip(&self.w2).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn elm_fit(mask: &[bool], train: &SelectionData, hidden: usize, rng: &mut RngState) -> Result<ElmModel> {
    let mut model = ElmModel::random(train.n_features(), hidden, rng);
    model.refit(mask, train)?;
    Ok(model)
}

pub fn elm_eval(model: &ElmModel, data: &SelectionData) -> f64 {
    let pred = model.predict(&data.x);
    pred.iter().zip(&data.y).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / data.len() as f64
}

/// Wrapper fitness: validation MSE of an ELM with a shared frozen hidden
/// layer, refitted per candidate mask.
#[derive(Debug, Clone)]
pub struct ElmFitness {
    base: ElmModel,
    train: SelectionData,
    validation: SelectionData,
}

impl ElmFitness {
    pub fn new(data: &SelectionData, hidden: usize, rng: &mut RngState) -> Result<Self> {
        let (train, validation) = data.split(0.8)?;
        Ok(ElmFitness {
            base: ElmModel::random(data.n_features(), hidden, rng),
            train,
            validation,
        })
    }

    pub fn evaluate(&self, mask: &[bool]) -> f64 {
        let mut m = self.base.clone();
        match m.refit(mask, &self.train) {
            Ok(()) => elm_eval(&m, &self.validation),
            Err(_) => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(n: usize, d: usize, seed: u64) -> SelectionData {
        noisy_linear(n, d, seed, 0.0)
    }

    fn noisy_linear(n: usize, d: usize, seed: u64, sigma: f64) -> SelectionData {
        let mut rng = RngState::new(seed);
        let x: Vec<f64> = (0..n * d).map(|_| rng.uniform()).collect();
        let y = (0..n)
            .map(|i| 0.3 * x[i * d] - 0.5 * x[i * d + 1] + 0.2 + sigma * rng.normal())
            .collect();
        SelectionData::new(Matrix::new(n, d, x).unwrap(), y).unwrap()
    }

    #[test]
    fn interpolates_when_hidden_exceeds_samples() {
        let data = linear(20, 3, 1);
        let mut y = data.y.clone();
        y[3] += 0.7; // not representable linearly
        let data = SelectionData::new(data.x, y).unwrap();
        let m = elm_fit(&[true; 3], &data, 40, &mut RngState::new(2)).unwrap();
        assert!(elm_eval(&m, &data) < 1e-8);
    }

    #[test]
    fn linear_task_within_ten_times_ols() {
        let train = noisy_linear(200, 4, 3, 0.02);
        let val = noisy_linear(100, 4, 4, 0.02);
        let m = elm_fit(&[true; 4], &train, DEFAULT_HIDDEN, &mut RngState::new(5)).unwrap();
        let mse = elm_eval(&m, &val);
        let mut design = Vec::new();
        for r in 0..train.len() {
            design.extend_from_slice(train.x.row(r));
            design.push(1.0);
        }
        let beta = least_squares(&Matrix::new(train.len(), 5, design).unwrap(), &Matrix::column(&train.y))
            .unwrap()
            .into_vec();
        let ols: f64 = (0..val.len())
            .map(|r| {
                let p: f64 = val.x.row(r).iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + beta[4];
                (p - val.y[r]).powi(2)
            })
            .sum::<f64>()
            / val.len() as f64;
        assert!(mse < 1e-2);
        assert!(mse <= 10.0 * ols, "{mse} vs {ols}");
    }

    #[test]
    fn same_seed_same_model() {
        let d = linear(30, 3, 1);
        let a = elm_fit(&[true, false, true], &d, 10, &mut RngState::new(8)).unwrap();
        let b = elm_fit(&[true, false, true], &d, 10, &mut RngState::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hidden_layer_frozen_across_refits() {
        let d = linear(60, 4, 2);
        let f = ElmFitness::new(&d, 10, &mut RngState::new(1)).unwrap();
        let w1 = f.base.w1.clone();
        let a = f.evaluate(&[true, true, false, false]);
        let _ = f.evaluate(&[false, true, true, true]);
        assert_eq!(f.evaluate(&[true, true, false, false]), a);
        assert_eq!(f.base.w1, w1);
        assert_eq!(f.evaluate(&[false; 4]), f64::INFINITY);
    }
}
