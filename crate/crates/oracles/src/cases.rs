//! Oracle procedures. Each returns the largest deviation it observed (or a
//! failure count), to be compared against the case tolerance.

use epf_core::dataio::flow_deviation;
use epf_core::eval::{dm_test, metrics, DmSide};
use epf_core::explain::{kernel_shap, BackgroundSet};
use epf_core::featsel::{
    ga_run, lasso_fit, pso_binary, pso_minimize, rfe_svr_select, svr_fit, GaConfig, PsoConfig, RfeConfig, SelectionData,
};
use epf_core::neural::{lstm_forward, CellOutput, LayerSpec, LstmParams, Network, NetworkSpec};
use epf_core::numkernel::{Activation, Matrix, RngState};
use epf_core::Error;

use crate::naive;

pub type Outcome = Result<f64, String>;

fn err(e: Error) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

// ---- eval ----

pub fn metrics_formulas(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = 1 + rng.below(60);
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_range(5.0, 100.0)).collect();
        let f: Vec<f64> = y.iter().map(|v| v + 10.0 * rng.normal()).collect();
        let got = metrics(&y, &f).map_err(err)?;
        let want = naive::metrics(&y, &f);
        for (g, w) in [got.mae, got.rmse, got.mape, got.smape].into_iter().zip(want) {
            worst = worst.max(rel(g, w));
        }
    }
    Ok(worst)
}

/// Counts violations of `rmse >= mae` and SMAPE symmetry.
pub fn metrics_properties(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = 1 + rng.below(40);
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_range(0.5, 200.0)).collect();
        let f: Vec<f64> = (0..n).map(|_| rng.uniform_range(0.5, 200.0)).collect();
        let a = metrics(&y, &f).map_err(err)?;
        let b = metrics(&f, &y).map_err(err)?;
        if a.rmse < a.mae * (1.0 - 1e-12) {
            violations += 1;
        }
        if (a.smape - b.smape).abs() > 1e-12 * a.smape.max(1.0) {
            violations += 1;
        }
    }
    Ok(violations as f64)
}

fn error_pair(rng: &mut RngState, n: usize, shift: f64) -> (Vec<f64>, Vec<f64>) {
    let e1 = (0..n).map(|_| rng.normal() * 2.0 + shift).collect();
    let e2 = (0..n).map(|_| rng.normal() * 2.0).collect();
    (e1, e2)
}

pub fn dm_against_naive(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let n = 10 + rng.below(190);
        let (e1, e2) = error_pair(&mut rng, n, 0.1 * case as f64);
        let got = dm_test(&e1, &e2, DmSide::F2Better).map_err(err)?;
        let (stat, p) = naive::dm_f2_better(&e1, &e2);
        worst = worst.max(rel(got.statistic, stat)).max((got.p_value - p).abs());
    }
    Ok(worst)
}

pub fn dm_antisymmetry(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = 10 + rng.below(200);
        let shift = rng.normal() * 0.3;
        let (e1, e2) = error_pair(&mut rng, n, shift);
        let a = dm_test(&e1, &e2, DmSide::F2Better).map_err(err)?;
        let b = dm_test(&e2, &e1, DmSide::F1Better).map_err(err)?;
        worst = worst
            .max((a.statistic + b.statistic).abs())
            .max((a.p_value - b.p_value).abs());
    }
    Ok(worst)
}

/// Rejection rate at the 5% level under equal accuracy, minus 0.05.
pub fn dm_calibration(seed: u64) -> Outcome {
    let trials = 1000;
    let rejections: usize = epf_core::par::map_indexed(trials, |i| {
        let mut rng = RngState::new(seed).fork(i as u64);
        let (e1, e2) = error_pair(&mut rng, 200, 0.0);
        dm_test(&e1, &e2, DmSide::F2Better).map(|r| usize::from(r.p_value < 0.05))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(err)?
    .into_iter()
    .sum();
    Ok((rejections as f64 / trials as f64 - 0.05).abs())
}

/// Counts degenerate inputs that did not produce a degenerate-input error.
pub fn dm_degenerate(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let e: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
    let flipped: Vec<f64> = e.iter().map(|v| -v).collect();
    let shifted: Vec<f64> = e.iter().map(|v| v.abs() + 1.0).collect();
    let cases = [
        (e.clone(), e.clone()),
        (e.clone(), flipped),
        (shifted, e.iter().map(|v| v.abs()).collect()),
    ];
    Ok(cases
        .iter()
        .filter(|(a, b)| !matches!(dm_test(a, b, DmSide::F2Better), Err(Error::Degenerate(_))))
        .count() as f64)
}

// ---- neural ----

/// Gradient of the squared error of a network, written into the last argument.
pub type GradientFn<'a> = dyn Fn(&Network, &[f64], &Matrix, f64, &mut [f64]) -> epf_core::Result<f64> + Sync + 'a;

pub fn lstm_spec() -> NetworkSpec {
    NetworkSpec::new(vec![LayerSpec::lstm(3), LayerSpec::dense(1, Activation::Linear)], 5, 4)
}

/// Finite-difference check of `gradient` on a 3-unit LSTM for one seed.
pub fn lstm_gradient_gap(seed: u64, gradient: &GradientFn<'_>) -> Outcome {
    let spec = lstm_spec();
    let net = Network::new(&spec).map_err(err)?;
    let mut rng = RngState::new(seed);
    let params: Vec<f64> = (0..net.param_count()).map(|_| rng.uniform_range(-0.8, 0.8)).collect();
    let input = Matrix::new(
        spec.window,
        spec.features,
        (0..spec.window * spec.features).map(|_| rng.normal()).collect(),
    )
    .map_err(err)?;
    let target = rng.normal();
    let mut analytic = vec![0.0; params.len()];
    gradient(&net, &params, &input, target, &mut analytic).map_err(err)?;
    let loss = |p: &[f64]| (net.forward(p, &input).expect("valid shapes") - target).powi(2);
    Ok(naive::finite_difference_gap(&loss, &params, &analytic, 1e-5, 1e-4))
}

pub fn core_gradient(net: &Network, p: &[f64], x: &Matrix, y: f64, g: &mut [f64]) -> epf_core::Result<f64> {
    net.loss_and_grad(p, x, y, g)
}

/// Worst gap over 20 consecutive seeds.
pub fn lstm_gradient_sweep(seed: u64, gradient: &GradientFn<'_>) -> Outcome {
    let gaps: Vec<Outcome> = epf_core::par::map_indexed(20, |i| lstm_gradient_gap(seed + i as u64, gradient));
    gaps.into_iter().try_fold(0.0f64, |m, g| Ok(m.max(g?)))
}

pub fn lstm_gradient(seed: u64) -> Outcome {
    lstm_gradient_sweep(seed, &core_gradient)
}

pub fn lstm_zero_params(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let seq = Matrix::new(8, 4, (0..32).map(|_| rng.normal() * 10.0).collect()).map_err(err)?;
    let states = lstm_forward(&LstmParams::zeros(4, 3), &seq, None, None, CellOutput::Tanh).map_err(err)?;
    Ok(states.h.iter().flatten().fold(0.0, |m, v| m.max(v.abs())))
}

pub fn lstm_naive_forward(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let (d, h) = (4, 3);
    let mut params = LstmParams::zeros(d, h);
    params.flat.iter_mut().for_each(|v| *v = rng.uniform_range(-1.0, 1.0));
    let rows: Vec<Vec<f64>> = (0..9).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
    let seq = Matrix::from_rows(&rows).map_err(err)?;
    let got = lstm_forward(&params, &seq, None, None, CellOutput::Tanh).map_err(err)?;
    let want = naive::lstm_hidden_states(&params.flat, d, h, &rows);
    let mut worst = 0.0f64;
    for (a, b) in got.h.iter().zip(&want) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

// ---- featsel ----

/// Replays continuous PSO from the same random stream and compares the
/// global-best trace and final position.
pub fn pso_velocity_replay(seed: u64) -> Outcome {
    let cfg = PsoConfig {
        iterations: 25,
        particles: 6,
        v_max: Some(1.0),
        ..PsoConfig::default()
    };
    let (dim, lo, hi) = (3, -3.0, 3.0);
    let f = |x: &[f64]| {
        x.iter()
            .enumerate()
            .map(|(j, v)| (v - j as f64 * 0.5).powi(2))
            .sum::<f64>()
    };
    let got = pso_minimize(dim, lo, hi, f, &cfg, &mut RngState::new(seed));

    let mut rng = RngState::new(seed);
    let mut x: Vec<Vec<f64>> = (0..cfg.particles)
        .map(|_| (0..dim).map(|_| rng.uniform_range(lo, hi)).collect())
        .collect();
    let mut v = vec![vec![0.0; dim]; cfg.particles];
    let mut pf: Vec<f64> = x.iter().map(|p| f(p)).collect();
    let mut pb = x.clone();
    let mut gi = 0;
    for i in 1..cfg.particles {
        if pf[i] < pf[gi] {
            gi = i;
        }
    }
    let (mut gf, mut gb) = (pf[gi], x[gi].clone());
    let mut trace = vec![gf];
    for _ in 0..cfg.iterations {
        let mut moved = vec![false; cfg.particles];
        for p in 0..cfg.particles {
            for j in 0..dim {
                let r1 = rng.uniform();
                let r2 = rng.uniform();
                let mut nv =
                    cfg.inertia * v[p][j] + cfg.c1 * r1 * (pb[p][j] - x[p][j]) + cfg.c2 * r2 * (gb[j] - x[p][j]);
                nv = nv.clamp(-1.0, 1.0);
                v[p][j] = nv;
                if nv != 0.0 {
                    x[p][j] += nv;
                    moved[p] = true;
                }
            }
        }
        for p in (0..cfg.particles).filter(|&p| moved[p]) {
            let val = f(&x[p]);
            if val < pf[p] {
                pf[p] = val;
                pb[p] = x[p].clone();
            }
            if val < gf {
                gf = val;
                gb = x[p].clone();
            }
        }
        trace.push(gf);
    }
    if got.trace.len() != trace.len() {
        return Err(format!("trace length {} vs {}", got.trace.len(), trace.len()));
    }
    let mut worst = 0.0f64;
    for (a, b) in got.trace.iter().zip(&trace).chain(got.best.iter().zip(&gb)) {
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

fn planted_mask(seed: u64) -> Vec<bool> {
    let mut rng = RngState::new(seed ^ 0x5eed);
    let mut m = vec![false; 62];
    for j in rng.sample_indices(62, 30) {
        m[j] = true;
    }
    m
}

fn hamming(a: &[bool], b: &[bool]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64
}

/// Seeds (out of 10) on which binary PSO missed the planted 30-bit mask.
pub fn pso_planted(seed: u64) -> Outcome {
    let cfg = PsoConfig {
        iterations: 500,
        ..PsoConfig::default()
    };
    let misses = epf_core::par::map_indexed(10, |i| {
        let s = seed + i as u64;
        let planted = planted_mask(s);
        let r = pso_binary(62, |m| hamming(m, &planted), &cfg, &mut RngState::new(s));
        usize::from(r.best != planted)
    });
    Ok(misses.iter().sum::<usize>() as f64)
}

pub fn ga_planted(seed: u64) -> Outcome {
    let cfg = GaConfig {
        generations: 2000,
        ..GaConfig::default()
    };
    let misses = epf_core::par::map_indexed(10, |i| {
        let s = seed + i as u64;
        let planted = planted_mask(s);
        let r = ga_run(62, |m| hamming(m, &planted), None, &cfg, &mut RngState::new(s));
        usize::from(r.best != planted)
    });
    Ok(misses.iter().sum::<usize>() as f64)
}

/// Seeds (out of 10) on which RFE-SVR discarded the single relevant feature.
pub fn rfe_planted(seed: u64) -> Outcome {
    let cfg = RfeConfig {
        drop_per_round: 4,
        ..RfeConfig::default()
    };
    let results = epf_core::par::map_indexed(10, |i| {
        let mut rng = RngState::new(seed + i as u64);
        let relevant = rng.below(62);
        let n = 120;
        let x: Vec<f64> = (0..n * 62).map(|_| rng.uniform()).collect();
        let y = (0..n)
            .map(|r| 3.0 * x[r * 62 + relevant] + 0.01 * rng.normal())
            .collect();
        let data = SelectionData::new(Matrix::new(n, 62, x)?, y)?;
        let r = rfe_svr_select(&data, &cfg)?;
        Ok::<usize, Error>(usize::from(!r.mask.bits()[relevant] || r.mask.popcount() != 30))
    });
    let misses = results.into_iter().collect::<Result<Vec<_>, _>>().map_err(err)?;
    Ok(misses.iter().sum::<usize>() as f64)
}

fn orthonormal_design(rng: &mut RngState, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
    naive::gram_schmidt(&mut cols);
    cols
}

fn to_matrix(cols: &[Vec<f64>]) -> Matrix {
    let (n, d) = (cols[0].len(), cols.len());
    Matrix::new(n, d, (0..n * d).map(|k| cols[k % d][k / d]).collect()).expect("consistent shape")
}

/// Orthonormal columns decouple the problem: `β_j = S(x_jᵀy, λ/2)`.
pub fn lasso_orthonormal(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut worst = 0.0f64;
    for lambda in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let cols = orthonormal_design(&mut rng, 30, 6);
        let y: Vec<f64> = (0..30).map(|_| 3.0 * rng.normal()).collect();
        let beta = lasso_fit(&to_matrix(&cols), &y, lambda).map_err(err)?;
        for (b, c) in beta.iter().zip(&cols) {
            let z: f64 = c.iter().zip(&y).map(|(a, b)| a * b).sum();
            worst = worst.max((b - naive::soft(z, lambda / 2.0)).abs());
        }
    }
    Ok(worst)
}

pub fn lasso_ols(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let (n, d) = (40, 5);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] - 2.0 * r[3] + 0.3 * rng.normal()).collect();
    let beta = lasso_fit(&Matrix::from_rows(&rows).map_err(err)?, &y, 0.0).map_err(err)?;
    let ols = naive::ols(&rows, &y);
    Ok(beta.iter().zip(&ols).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Relative gap between the solver's primal value and the brute-force
/// minimum on 10 small two-feature problems.
pub fn svr_bruteforce(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = 3 + rng.below(6);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.uniform_range(-2.0, 2.0), rng.uniform_range(-2.0, 2.0)])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.5 * r[0] - 0.7 * r[1] + 0.5 + 0.4 * rng.normal())
            .collect();
        let c = [0.1, 1.0, 10.0][rng.below(3)];
        let eps = [0.0, 0.05, 0.3][rng.below(3)];
        let model = svr_fit(
            &SelectionData::new(Matrix::from_rows(&rows).map_err(err)?, y.clone()).map_err(err)?,
            c,
            eps,
        )
        .map_err(err)?;
        let got = naive::svr_objective(&rows, &y, &model.w, model.b, c, eps);
        let (best, _, _) = naive::svr_brute_force(&rows, &y, c, eps);
        worst = worst.max((got - best).abs() / best.abs().max(1e-12));
    }
    Ok(worst)
}

// ---- dataio ----

pub fn flow_deviation_cases(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mu: [f64; 24] = std::array::from_fn(|_| rng.uniform_range(0.0, 1000.0));
    let plus5: [f64; 24] = std::array::from_fn(|h| mu[h] + 5.0);
    let mut spike = mu;
    spike[rng.below(24)] += 24.0;
    let random: [f64; 24] = std::array::from_fn(|_| rng.uniform_range(0.0, 1000.0));
    let checks = [
        (flow_deviation(&mu, &mu), 0.0),
        (flow_deviation(&plus5, &mu), 5.0),
        (flow_deviation(&spike, &mu), 24f64.sqrt()),
        (flow_deviation(&random, &mu), naive::flow_deviation(&random, &mu)),
    ];
    Ok(checks.iter().fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

// ---- explain ----

fn nonlinear_model(x: &[f64]) -> f64 {
    let d = x.len();
    let mut v = x[0].sin() + 0.5 * x[d - 1] * x[d - 1];
    for j in 1..d {
        v += (0.3 + 0.1 * j as f64) * x[j] * x[j - 1] - 0.2 * x[j];
    }
    v + (x.iter().sum::<f64>() * 0.3).tanh()
}

fn background(rng: &mut RngState, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.normal()).collect()).collect()
}

fn bg_set(rows: &[Vec<f64>]) -> Result<BackgroundSet, String> {
    BackgroundSet::new(Matrix::from_rows(rows).map_err(err)?).map_err(err)
}

/// Kernel SHAP with a full coalition budget against permutation Shapley.
pub fn kernel_shap_exact(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let mut worst = 0.0f64;
    for d in [2, 3, 5, 8, 10] {
        let bg = background(&mut rng, 12, d);
        let x: Vec<f64> = (0..d).map(|_| rng.normal() * 1.5).collect();
        let values = naive::coalition_table(&nonlinear_model, &x, &bg);
        let want = naive::shapley_by_permutations(&values, d);
        let got = kernel_shap(
            &nonlinear_model,
            &x,
            &bg_set(&bg)?,
            (1 << d) + 2,
            &mut rng.fork(d as u64),
        )
        .map_err(err)?;
        for (a, b) in got.phi.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// On a linear model every full-rank coalition sample recovers
/// `φ_j = w_j (x_j - E[x_j])` exactly.
pub fn kernel_shap_sampled_linear(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let d = 14;
    let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let model = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 2.0;
    let bg = background(&mut rng, 30, d);
    let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let got = kernel_shap(&model, &x, &bg_set(&bg)?, 600, &mut rng.fork(1)).map_err(err)?;
    let mut worst = 0.0f64;
    for j in 0..d {
        let mean = bg.iter().map(|r| r[j]).sum::<f64>() / bg.len() as f64;
        worst = worst.max((got.phi[j] - w[j] * (x[j] - mean)).abs());
    }
    Ok(worst)
}

/// Efficiency, symmetry and dummy on a model where features 0 and 1 enter
/// symmetrically and the last feature is ignored.
pub fn shap_axioms(seed: u64) -> Outcome {
    let mut rng = RngState::new(seed);
    let d = 6;
    let model = |x: &[f64]| (x[0] + x[1]).powi(2) + x[0] * x[1] * x[2] + x[3].sin() - x[4];
    let mut bg = background(&mut rng, 16, d);
    let extra: Vec<Vec<f64>> = bg
        .iter()
        .map(|r| {
            let mut s = r.clone();
            s.swap(0, 1);
            s
        })
        .collect();
    bg.extend(extra);
    let mut x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    x[1] = x[0];
    let mut worst = 0.0f64;
    for budget in [(1 << d) + 2, 40] {
        let e = kernel_shap(&model, &x, &bg_set(&bg)?, budget, &mut rng.fork(budget as u64)).map_err(err)?;
        let total: f64 = e.phi.iter().sum();
        worst = worst.max((total - (e.prediction - e.base)).abs());
        if budget > 40 {
            worst = worst.max((e.phi[0] - e.phi[1]).abs()).max(e.phi[d - 1].abs());
        }
    }
    Ok(worst)
}
