use serde::{Deserialize, Serialize};

/// Adam with bias-corrected moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) {
    assert_eq!(params.len(), state.m.len(), "parameter count");
    assert_eq!(grads.len(), state.m.len(), "gradient count");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = AdamState::new(3, 0.01);
        s.m = vec![0.5, -0.2, 0.1];
        s.v = vec![0.3, 0.2, 0.1];
        s.step = 5;
        let mut p = vec![1.0, 2.0, 3.0];
        let mut before = s.m.clone();
        // Moments must decay while parameters move only through the old momentum.
        let mut z = AdamState::new(3, 0.01);
        let mut q = p.clone();
        adam_step(&mut z, &mut q, &[0.0; 3]);
        assert_eq!(q, p);
        adam_step(&mut s, &mut p, &[0.0; 3]);
        for (a, b) in s.m.iter().zip(&mut before) {
            assert!(a.abs() < b.abs());
        }
        assert_eq!(s.step, 6);
    }

    #[test]
    fn constant_gradient_step_tends_to_learning_rate() {
        let lr = 1e-3;
        let mut s = AdamState::new(2, lr);
        let mut p = vec![0.0, 0.0];
        let g = [0.7, -3.0];
        let mut last = p.clone();
        for _ in 0..2000 {
            last.copy_from_slice(&p);
            adam_step(&mut s, &mut p, &g);
        }
        for i in 0..2 {
            let delta = p[i] - last[i];
            let expected = -lr * g[i].signum();
            assert!((delta - expected).abs() <= 0.05 * lr, "{delta} vs {expected}");
        }
    }

    #[test]
    fn identical_runs() {
        let run = || {
            let mut s = AdamState::new(3, 0.1);
            let mut p = vec![1.0, -1.0, 0.5];
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| 2.0 * x + k as f64 * 0.01).collect();
                adam_step(&mut s, &mut p, &g);
            }
            p
        };
        assert_eq!(run(), run());
    }
}
