//! Particle swarm optimization, continuous and binary.
//!
//! Velocity update per dimension, with `r1, r2 ~ U(0, 1)`:
//! `v <- ω v + c1 r1 (p - x) + c2 r2 (g - x)`, then `x <- x + v`.
//!
//! The binary variant keeps continuous positions; each evaluation maps a
//! position to bits by `sigmoid(x_j) > r_j` and repairs the result to exactly
//! `k` bits by position value. A particle whose position did not move keeps
//! its previous evaluation. In the binary variant, best positions are the
//! `±INIT_RANGE` encodings of the best masks found.

use serde::{Deserialize, Serialize};

use super::mask::top_k;
use crate::numkernel::{sigmoid, RngState};
use crate::par;

const INIT_RANGE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub c1: f64,
    pub c2: f64,
    pub inertia: f64,
    pub iterations: usize,
    pub particles: usize,
    pub k: usize,
    /// Per-dimension velocity bound; `None` leaves velocities unbounded.
    pub v_max: Option<f64>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            c1: 0.5,
            c2: 0.3,
            inertia: 0.7,
            iterations: 10_000,
            particles: 20,
            k: 30,
            v_max: Some(4.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub personal_best: Vec<Vec<f64>>,
    pub personal_fitness: Vec<f64>,
    pub global_best: Vec<f64>,
    pub global_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult<T> {
    pub best: T,
    pub fitness: f64,
    /// Global best fitness after initialization and after each iteration.
    pub trace: Vec<f64>,
}

fn step(state: &mut SwarmState, config: &PsoConfig, rng: &mut RngState) -> Vec<bool> {
    let mut moved = Vec::with_capacity(state.positions.len());
    for p in 0..state.positions.len() {
        let mut any = false;
        for j in 0..state.positions[p].len() {
            let (r1, r2) = (rng.uniform(), rng.uniform());
            let x = state.positions[p][j];
            let mut v = config.inertia * state.velocities[p][j]
                + config.c1 * r1 * (state.personal_best[p][j] - x)
                + config.c2 * r2 * (state.global_best[j] - x);
            if let Some(m) = config.v_max {
                v = v.clamp(-m, m);
            }
            state.velocities[p][j] = v;
            if v != 0.0 {
                state.positions[p][j] = x + v;
                any = true;
            }
        }
        moved.push(any);
    }
    moved
}

/// Minimizes `f` over `R^dim`, starting from positions uniform in `[lo, hi]`
/// and zero velocities.
pub fn pso_minimize<F>(
    dim: usize,
    lo: f64,
    hi: f64,
    f: F,
    config: &PsoConfig,
    rng: &mut RngState,
) -> PsoResult<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let positions: Vec<Vec<f64>> = (0..config.particles)
        .map(|_| (0..dim).map(|_| rng.uniform_range(lo, hi)).collect())
        .collect();
    let fitness = par::map_slice(&positions, |x| f(x));
    let mut state = init_state(positions, fitness);
    let mut trace = vec![state.global_fitness];
    for _ in 0..config.iterations {
        let moved = step(&mut state, config, rng);
        let idx: Vec<usize> = (0..moved.len()).filter(|&p| moved[p]).collect();
        let values = par::map_slice(&idx, |&p| f(&state.positions[p]));
        for (&p, v) in idx.iter().zip(values) {
            update_bests(&mut state, p, v);
        }
        trace.push(state.global_fitness);
    }
    PsoResult {
        best: state.global_best,
        fitness: state.global_fitness,
        trace,
    }
}

fn init_state(positions: Vec<Vec<f64>>, fitness: Vec<f64>) -> SwarmState {
    let dim = positions.first().map_or(0, |p| p.len());
    let best = argmin(&fitness);
    SwarmState {
        velocities: vec![vec![0.0; dim]; positions.len()],
        personal_best: positions.clone(),
        personal_fitness: fitness.clone(),
        global_best: positions[best].clone(),
        global_fitness: fitness[best],
        positions,
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Returns true when the global best improved.
fn update_bests(state: &mut SwarmState, p: usize, value: f64) -> bool {
    if value < state.personal_fitness[p] {
        state.personal_fitness[p] = value;
        state.personal_best[p] = state.positions[p].clone();
    }
    if value < state.global_fitness {
        state.global_fitness = value;
        state.global_best = state.positions[p].clone();
        return true;
    }
    false
}

/// Stochastic threshold of `position` followed by repair to `k` bits.
pub fn binarize(position: &[f64], draws: &[f64], k: usize) -> Vec<bool> {
    let mut bits: Vec<bool> = position.iter().zip(draws).map(|(&x, &r)| sigmoid(x) > r).collect();
    let count = bits.iter().filter(|&&b| b).count();
    if count > k {
        // Keep the k selected bits with the largest positions.
        let scores: Vec<f64> = position
            .iter()
            .zip(&bits)
            .map(|(&x, &b)| if b { x } else { f64::NEG_INFINITY })
            .collect();
        let keep = top_k(&scores, k);
        bits = vec![false; position.len()];
        keep.into_iter().for_each(|j| bits[j] = true);
    } else if count < k {
        let scores: Vec<f64> = position
            .iter()
            .zip(&bits)
            .map(|(&x, &b)| if b { f64::NEG_INFINITY } else { x })
            .collect();
        top_k(&scores, k - count).into_iter().for_each(|j| bits[j] = true);
    }
    bits
}

/// Continuous stand-in for a mask: `+INIT_RANGE` on selected bits, `-INIT_RANGE` elsewhere.
fn encode(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&b| if b { INIT_RANGE } else { -INIT_RANGE }).collect()
}

/// Binary PSO over `dim` bits with cardinality `config.k`, minimizing
/// `fitness`. Initial positions are uniform in `[-INIT_RANGE, INIT_RANGE]`.
/// Personal and global bests are kept as encodings of the masks that earned
/// them, so the swarm is attracted toward those masks rather than toward the
/// positions they happened to be sampled from.
pub fn pso_binary<F>(dim: usize, fitness: F, config: &PsoConfig, rng: &mut RngState) -> PsoResult<Vec<bool>>
where
    F: Fn(&[bool]) -> f64 + Sync + Send,
{
    let draw_masks = |positions: &[&Vec<f64>], rng: &mut RngState| -> Vec<Vec<bool>> {
        positions
            .iter()
            .map(|x| {
                let draws: Vec<f64> = (0..dim).map(|_| rng.uniform()).collect();
                binarize(x, &draws, config.k)
            })
            .collect()
    };
    let positions: Vec<Vec<f64>> = (0..config.particles)
        .map(|_| (0..dim).map(|_| rng.uniform_range(-INIT_RANGE, INIT_RANGE)).collect())
        .collect();
    let masks = draw_masks(&positions.iter().collect::<Vec<_>>(), rng);
    let values = par::map_slice(&masks, |m| fitness(m));
    let mut best_mask = masks[argmin(&values)].clone();
    let mut state = init_state(positions, values);
    state.personal_best = masks.iter().map(|m| encode(m)).collect();
    state.global_best = encode(&best_mask);
    let mut trace = vec![state.global_fitness];
    for _ in 0..config.iterations {
        let moved = step(&mut state, config, rng);
        let idx: Vec<usize> = (0..moved.len()).filter(|&p| moved[p]).collect();
        let fresh = draw_masks(&idx.iter().map(|&p| &state.positions[p]).collect::<Vec<_>>(), rng);
        let values = par::map_slice(&fresh, |m| fitness(m));
        for ((&p, v), m) in idx.iter().zip(values).zip(fresh) {
            if v < state.personal_fitness[p] {
                state.personal_fitness[p] = v;
                state.personal_best[p] = encode(&m);
            }
            if v < state.global_fitness {
                state.global_fitness = v;
                state.global_best = encode(&m);
                best_mask = m;
            }
        }
        trace.push(state.global_fitness);
    }
    PsoResult {
        best: best_mask,
        fitness: state.global_fitness,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_converges() {
        let cfg = PsoConfig {
            iterations: 1000,
            v_max: None,
            ..PsoConfig::default()
        };
        for seed in 0..5 {
            let r = pso_minimize(
                2,
                -5.0,
                5.0,
                |x| x.iter().map(|v| v * v).sum(),
                &cfg,
                &mut RngState::new(seed),
            );
            let dist = r.best.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dist < 1e-3, "seed {seed}: {dist}");
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn frozen_swarm_keeps_best_initial() {
        let cfg = PsoConfig {
            c1: 0.0,
            c2: 0.0,
            inertia: 0.0,
            iterations: 50,
            ..PsoConfig::default()
        };
        let planted: Vec<bool> = (0..62).map(|j| j < 30).collect();
        let fit = |m: &[bool]| m.iter().zip(&planted).filter(|(a, b)| a != b).count() as f64;
        let r = pso_binary(62, fit, &cfg, &mut RngState::new(3));
        assert!(r.trace.iter().all(|&v| v == r.trace[0]));
        let r0 = pso_binary(
            62,
            fit,
            &PsoConfig {
                iterations: 0,
                ..cfg.clone()
            },
            &mut RngState::new(3),
        );
        assert_eq!(r.best, r0.best);
    }

    #[test]
    fn repair_keeps_exact_cardinality() {
        let pos: Vec<f64> = (0..10).map(|j| j as f64 - 5.0).collect();
        assert_eq!(binarize(&pos, &[0.0; 10], 3), [vec![false; 7], vec![true; 3]].concat());
        let b = binarize(&pos, &[1.0; 10], 4);
        assert_eq!(b.iter().filter(|&&x| x).count(), 4);
        assert!(b[6..].iter().all(|&x| x));
    }

    #[test]
    fn planted_mask_recovered() {
        let planted: Vec<bool> = (0..62).map(|j| j < 30).collect();
        let fit = |m: &[bool]| m.iter().zip(&planted).filter(|(a, b)| a != b).count() as f64;
        let cfg = PsoConfig {
            iterations: 500,
            ..PsoConfig::default()
        };
        for seed in 0..10 {
            let r = pso_binary(62, fit, &cfg, &mut RngState::new(seed));
            assert_eq!(r.best, planted, "seed {seed}");
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
