use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Sigmoid,
    Tanh,
    Relu,
}

/// Logistic sigmoid, evaluated on the branch that cannot overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y = apply(x)`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Elementwise activation of a sequence.
pub fn activate(xs: &[f64], kind: Activation) -> Vec<f64> {
    xs.iter().map(|&x| kind.apply(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
    }

    #[test]
    fn saturation_is_finite() {
        let ys = activate(&[1e4, 800.0, -800.0, -1e4], Activation::Sigmoid);
        assert!(ys.iter().all(|y| y.is_finite()));
        assert!(ys[0] <= 1.0 && ys[0] > 1.0 - 1e-12);
        assert!(ys[3] >= 0.0 && ys[3] < 1e-12);
        let t = activate(&[1e4, -1e4], Activation::Tanh);
        assert_eq!(t, vec![1.0, -1.0]);
    }

    #[test]
    fn open_ranges_for_moderate_inputs() {
        for i in -300..=300 {
            let x = i as f64 / 10.0;
            let s = sigmoid(x);
            assert!(s > 0.0 && s < 1.0, "sigmoid({x}) = {s}");
            let t = x.tanh();
            assert!(t.abs() <= 1.0);
        }
    }
}
