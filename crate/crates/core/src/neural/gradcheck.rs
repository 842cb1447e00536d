use super::network::{Network, NetworkSpec};
use crate::error::Result;
use crate::numkernel::Matrix;

pub const FD_STEP: f64 = 1e-5;

/// Gradients below this magnitude are compared in absolute terms.
const REL_FLOOR: f64 = 1e-4;

/// Largest relative error between the analytic gradient of the squared error
/// and central finite differences, over all parameters.
pub fn gradient_check(spec: &NetworkSpec, params: &[f64], input: &Matrix, target: f64) -> Result<f64> {
    let net = Network::new(spec)?;
    let mut analytic = vec![0.0; params.len()];
    net.loss_and_grad(params, input, target, &mut analytic)?;
    let loss = |p: &[f64]| -> Result<f64> { Ok((net.forward(p, input)? - target).powi(2)) };
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + FD_STEP;
        let up = loss(&p)?;
        p[i] = orig - FD_STEP;
        let down = loss(&p)?;
        p[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let scale = analytic[i].abs().max(numeric.abs()).max(REL_FLOOR);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{CellOutput, LayerSpec};
    use crate::numkernel::{Activation, RngState};

    fn check(spec: &NetworkSpec, seed: u64, scale: f64) -> f64 {
        let net = Network::new(spec).unwrap();
        let mut rng = RngState::new(seed);
        let params: Vec<f64> = (0..net.param_count())
            .map(|_| rng.uniform_range(-scale, scale))
            .collect();
        let x = Matrix::new(
            spec.window,
            spec.features,
            (0..spec.window * spec.features).map(|_| rng.normal()).collect(),
        )
        .unwrap();
        gradient_check(spec, &params, &x, rng.normal()).unwrap()
    }

    #[test]
    fn lstm_three_units() {
        let spec = NetworkSpec::new(vec![LayerSpec::lstm(3), LayerSpec::dense(1, Activation::Linear)], 4, 2);
        for seed in 0..20 {
            let e = check(&spec, seed, 0.8);
            assert!(e < 1e-4, "seed {seed}: {e}");
        }
    }

    #[test]
    fn lstm_literal_cell_output() {
        let mut spec = NetworkSpec::new(vec![LayerSpec::lstm(2), LayerSpec::dense(1, Activation::Linear)], 3, 3);
        spec.cell_output = CellOutput::Identity;
        for seed in 0..5 {
            assert!(check(&spec, seed, 0.8) < 1e-4);
        }
    }

    #[test]
    fn dense_only() {
        let spec = NetworkSpec::new(
            vec![
                LayerSpec::Flatten,
                LayerSpec::dense(5, Activation::Tanh),
                LayerSpec::dense(4, Activation::Sigmoid),
                LayerSpec::dense(1, Activation::Linear),
            ],
            2,
            3,
        );
        for seed in 0..20 {
            let e = check(&spec, seed, 1.0);
            assert!(e < 1e-6, "seed {seed}: {e}");
        }
    }

    #[test]
    fn conv_pool() {
        let spec = NetworkSpec::new(
            vec![
                LayerSpec::Conv1d {
                    filters: 3,
                    kernel: 2,
                    activation: Activation::Tanh,
                },
                LayerSpec::MaxPool { width: 2 },
                LayerSpec::Flatten,
                LayerSpec::dense(1, Activation::Linear),
            ],
            5,
            2,
        );
        for seed in 0..20 {
            let e = check(&spec, seed, 1.0);
            assert!(e < 1e-4, "seed {seed}: {e}");
        }
    }

    #[test]
    fn encoder_decoder_stack() {
        let spec = NetworkSpec::new(
            vec![
                LayerSpec::lstm(3),
                LayerSpec::Repeat { steps: 2 },
                LayerSpec::Lstm {
                    units: 2,
                    sequences: true,
                },
                LayerSpec::Flatten,
                LayerSpec::dense(2, Activation::Relu),
                LayerSpec::dense(1, Activation::Linear),
            ],
            3,
            2,
        );
        for seed in 0..10 {
            let e = check(&spec, seed, 0.8);
            assert!(e < 1e-4, "seed {seed}: {e}");
        }
    }

    #[test]
    fn convlstm_stack() {
        let spec = NetworkSpec::new(
            vec![
                LayerSpec::ConvLstm {
                    filters: 2,
                    kernel: 3,
                    channels: 1,
                },
                LayerSpec::dense(1, Activation::Linear),
            ],
            3,
            4,
        );
        for seed in 0..10 {
            let e = check(&spec, seed, 0.8);
            assert!(e < 1e-4, "seed {seed}: {e}");
        }
    }
}
