//! Steady-state bitstring GA with fixed cardinality.
//!
//! Each generation breeds `offspring` children: two parents by binary
//! tournament, single-point crossover with probability `crossover`, and with
//! probability `mutation` one uniformly chosen bit flips. Children are
//! repaired to `k` bits by dropping or adding random bits, then each replaces
//! the worst member of the pool if strictly fitter.

use serde::{Deserialize, Serialize};

use crate::numkernel::RngState;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub crossover: f64,
    pub mutation: f64,
    pub population: usize,
    pub generations: usize,
    pub offspring: usize,
    pub k: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            crossover: 0.5,
            mutation: 0.2,
            population: 100,
            generations: 10_000,
            offspring: 10,
            k: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub chromosomes: Vec<Vec<bool>>,
    pub fitness: Vec<f64>,
}

impl Population {
    pub fn best(&self) -> usize {
        let mut b = 0;
        for (i, f) in self.fitness.iter().enumerate() {
            if *f < self.fitness[b] {
                b = i;
            }
        }
        b
    }

    fn worst(&self) -> usize {
        let mut w = 0;
        for (i, f) in self.fitness.iter().enumerate() {
            if *f > self.fitness[w] {
                w = i;
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: Vec<bool>,
    pub fitness: f64,
    /// Best fitness in the pool after initialization and each generation.
    pub trace: Vec<f64>,
    pub population: Population,
}

pub fn random_subset(dim: usize, k: usize, rng: &mut RngState) -> Vec<bool> {
    let mut bits = vec![false; dim];
    rng.sample_indices(dim, k).into_iter().for_each(|j| bits[j] = true);
    bits
}

/// Random drop/add until exactly `k` bits are set.
pub fn repair(bits: &mut [bool], k: usize, rng: &mut RngState) {
    let mut on: Vec<usize> = (0..bits.len()).filter(|&j| bits[j]).collect();
    while on.len() > k {
        let j = on.swap_remove(rng.below(on.len()));
        bits[j] = false;
    }
    if on.len() < k {
        let mut off: Vec<usize> = (0..bits.len()).filter(|&j| !bits[j]).collect();
        for _ in on.len()..k {
            let j = off.swap_remove(rng.below(off.len()));
            bits[j] = true;
        }
    }
}

fn tournament<'a>(pop: &'a Population, rng: &mut RngState) -> &'a [bool] {
    let a = rng.below(pop.chromosomes.len());
    let b = rng.below(pop.chromosomes.len());
    if pop.fitness[b] < pop.fitness[a] {
        &pop.chromosomes[b]
    } else {
        &pop.chromosomes[a]
    }
}

fn breed(pop: &Population, config: &GaConfig, rng: &mut RngState) -> Vec<Vec<bool>> {
    let mut children = Vec::with_capacity(config.offspring);
    while children.len() < config.offspring {
        let mut a = tournament(pop, rng).to_vec();
        let mut b = tournament(pop, rng).to_vec();
        if rng.uniform() < config.crossover && a.len() > 1 {
            let cut = 1 + rng.below(a.len() - 1);
            for j in cut..a.len() {
                std::mem::swap(&mut a[j], &mut b[j]);
            }
        }
        for child in [a, b] {
            let mut child = child;
            if rng.uniform() < config.mutation {
                let j = rng.below(child.len());
                child[j] = !child[j];
            }
            repair(&mut child, config.k, rng);
            if children.len() < config.offspring {
                children.push(child);
            }
        }
    }
    children
}

/// Runs the GA from `initial` (random `k`-subsets when `None`), minimizing
/// `fitness`.
pub fn ga_run<F>(
    dim: usize,
    fitness: F,
    initial: Option<Vec<Vec<bool>>>,
    config: &GaConfig,
    rng: &mut RngState,
) -> GaResult
where
    F: Fn(&[bool]) -> f64 + Sync + Send,
{
    let chromosomes = initial.unwrap_or_else(|| {
        (0..config.population)
            .map(|_| random_subset(dim, config.k, rng))
            .collect()
    });
    let values = par::map_slice(&chromosomes, |c| fitness(c));
    let mut pop = Population {
        chromosomes,
        fitness: values,
    };
    let mut trace = vec![pop.fitness[pop.best()]];
    for _ in 0..config.generations {
        let children = breed(&pop, config, rng);
        let values = par::map_slice(&children, |c| fitness(c));
        for (child, v) in children.into_iter().zip(values) {
            let w = pop.worst();
            if v < pop.fitness[w] {
                pop.chromosomes[w] = child;
                pop.fitness[w] = v;
            }
        }
        trace.push(pop.fitness[pop.best()]);
    }
    let b = pop.best();
    GaResult {
        best: pop.chromosomes[b].clone(),
        fitness: pop.fitness[b],
        trace,
        population: pop,
    }
}
