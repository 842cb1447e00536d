//! Slow, direct reference implementations. Nothing here calls into the code
//! it is used to check.

use std::f64::consts::PI;

/// MAE, RMSE, MAPE, SMAPE written as plain sums.
pub fn metrics(y: &[f64], f: &[f64]) -> [f64; 4] {
    let n = y.len() as f64;
    let mut out = [0.0; 4];
    for i in 0..y.len() {
        let e = y[i] - f[i];
        out[0] += e.abs() / n;
        out[1] += e * e / n;
        out[2] += 100.0 * (e / y[i]).abs() / n;
        out[3] += 100.0 * 2.0 * e.abs() / (y[i].abs() + f[i].abs()) / n;
    }
    out[1] = out[1].sqrt();
    out
}

/// Lanczos approximation (g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn t_density(x: f64, df: f64) -> f64 {
    let c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln();
    (c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Student-t CDF by composite Simpson integration of the density from 0.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let a = t.abs();
    let n = 20_000;
    let h = a / n as f64;
    let mut s = t_density(0.0, df) + t_density(a, df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_density(i as f64 * h, df);
    }
    let half = s * h / 3.0;
    if t >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// One-sided DM with the small-sample correction; returns the corrected
/// statistic and the p-value for "the second forecast is better".
pub fn dm_f2_better(e1: &[f64], e2: &[f64]) -> (f64, f64) {
    let n = e1.len();
    let d: Vec<f64> = (0..n).map(|i| e1[i].abs() - e2[i].abs()).collect();
    let t = n as f64;
    let mean = d.iter().sum::<f64>() / t;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
    let dm = mean / (var / t).sqrt();
    let hln = dm * ((t + 1.0 - 2.0) / t).sqrt();
    (hln, 1.0 - t_cdf(hln, t - 1.0))
}

pub fn flow_deviation(flow: &[f64], capacity: &[f64]) -> f64 {
    let mut s = 0.0;
    for h in 0..24 {
        s += (flow[h] - capacity[h]).powi(2);
    }
    (s / 24.0).sqrt()
}

/// Gaussian elimination with partial pivoting on a dense square system.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            let pivot = a[col].clone();
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= m * p;
            }
            b[r] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Ordinary least squares through the normal equations. `x` is row-major.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let d = x[0].len();
    let mut xtx = vec![vec![0.0; d]; d];
    let mut xty = vec![0.0; d];
    for (row, &v) in x.iter().zip(y) {
        for i in 0..d {
            xty[i] += row[i] * v;
            for j in 0..d {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    solve(xtx, xty)
}

/// Orthonormalizes the columns of `cols` in place (classical Gram–Schmidt,
/// applied twice for stability).
pub fn gram_schmidt(cols: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for j in 0..cols.len() {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let prev = cols[k].clone();
                for (v, p) in cols[j].iter_mut().zip(prev) {
                    *v -= dot * p;
                }
            }
            let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            cols[j].iter_mut().for_each(|v| *v /= norm);
        }
    }
}

pub fn soft(z: f64, g: f64) -> f64 {
    z.signum() * (z.abs() - g).max(0.0)
}

/// Linear ε-SVR primal value at `(w, b)`.
pub fn svr_objective(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, c: f64, eps: f64) -> f64 {
    let mut loss = 0.0;
    for (row, &t) in x.iter().zip(y) {
        let f: f64 = b + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        loss += ((t - f).abs() - eps).max(0.0);
    }
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * loss
}

/// For fixed `w` the primal is piecewise linear and convex in `b` with kinks
/// at `y_i - w·x_i ± ε`, so the best `b` is one of those points.
fn svr_best_b(x: &[Vec<f64>], y: &[f64], w: &[f64], c: f64, eps: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for (row, &t) in x.iter().zip(y) {
        let r = t - row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        for b in [r - eps, r + eps] {
            let v = svr_objective(x, y, w, b, c, eps);
            if v < best.0 {
                best = (v, b);
            }
        }
    }
    best
}

fn ternary(lo: f64, hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..iters {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let m = 0.5 * (lo + hi);
    (f(m), m)
}

/// Brute-force minimum of the two-feature linear SVR primal: nested ternary
/// search over `w` (the partial minimum over `b` stays convex) with the
/// exact best `b` at each point. Returns `(objective, w, b)`.
pub fn svr_brute_force(x: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> (f64, [f64; 2], f64) {
    assert!(x.iter().all(|r| r.len() == 2), "two features only");
    let start = svr_best_b(x, y, &[0.0, 0.0], c, eps).0;
    let r = (2.0 * start).sqrt() + 1e-9;
    let inner = |w1: f64| ternary(-r, r, 120, |w2| svr_best_b(x, y, &[w1, w2], c, eps).0);
    let (_, w1) = ternary(-r, r, 120, |w1| inner(w1).0);
    let (_, w2) = inner(w1);
    let (v, b) = svr_best_b(x, y, &[w1, w2], c, eps);
    (v, [w1, w2], b)
}

/// Interventional coalition values for every subset (bit `j` set means
/// feature `j` is taken from the instance).
pub fn coalition_table(model: &dyn Fn(&[f64]) -> f64, instance: &[f64], background: &[Vec<f64>]) -> Vec<f64> {
    let d = instance.len();
    (0..1usize << d)
        .map(|s| {
            let mut total = 0.0;
            for row in background {
                let z: Vec<f64> = (0..d)
                    .map(|j| if s >> j & 1 == 1 { instance[j] } else { row[j] })
                    .collect();
                total += model(&z);
            }
            total / background.len() as f64
        })
        .collect()
}

/// Shapley values as the average marginal contribution over all `d!`
/// feature orderings (Heap's algorithm).
pub fn shapley_by_permutations(values: &[f64], d: usize) -> Vec<f64> {
    let mut phi = vec![0.0; d];
    let mut perm: Vec<usize> = (0..d).collect();
    let mut count = 0u64;
    let mut visit = |p: &[usize]| {
        let mut s = 0usize;
        for &j in p {
            let next = s | 1 << j;
            phi[j] += values[next] - values[s];
            s = next;
        }
        count += 1;
    };
    let mut c = vec![0usize; d];
    visit(&perm);
    let mut i = 0;
    while i < d {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    phi.iter().map(|v| v / count as f64).collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Peephole LSTM over `seq` (rows are time steps) with flat weights laid out
/// as `wx (4H x D) | wh (4H x H) | peep (3H) | b (4H)`, gates ordered
/// forget, input, output, candidate. Returns every hidden state.
pub fn lstm_hidden_states(flat: &[f64], d: usize, h: usize, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let wx = |g: usize, j: usize, k: usize| flat[(g * h + j) * d + k];
    let wh = |g: usize, j: usize, k: usize| flat[4 * h * d + (g * h + j) * h + k];
    let peep = |g: usize, j: usize| flat[4 * h * d + 4 * h * h + g * h + j];
    let bias = |g: usize, j: usize| flat[4 * h * d + 4 * h * h + 3 * h + g * h + j];
    let mut hs = vec![0.0; h];
    let mut cs = vec![0.0; h];
    let mut out = Vec::new();
    for x in seq {
        let pre = |g: usize, j: usize| {
            bias(g, j)
                + (0..d).map(|k| wx(g, j, k) * x[k]).sum::<f64>()
                + (0..h).map(|k| wh(g, j, k) * hs[k]).sum::<f64>()
        };
        let mut h_next = vec![0.0; h];
        let mut c_next = vec![0.0; h];
        for j in 0..h {
            let f = sig(pre(0, j) + peep(0, j) * cs[j]);
            let i = sig(pre(1, j) + peep(1, j) * cs[j]);
            let o = sig(pre(2, j) + peep(2, j) * cs[j]);
            let g = pre(3, j).tanh();
            c_next[j] = f * cs[j] + i * g;
            h_next[j] = o * c_next[j].tanh();
        }
        hs = h_next;
        cs = c_next;
        out.push(hs.clone());
    }
    out
}

/// Largest relative gap between `analytic` and central differences of
/// `loss`, with gradients under `floor` compared absolutely.
pub fn finite_difference_gap(
    loss: &dyn Fn(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    step: f64,
    floor: f64,
) -> f64 {
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + step;
        let up = loss(&p);
        p[i] = orig - step;
        let down = loss(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * step);
        let scale = numeric.abs().max(analytic[i].abs()).max(floor);
        worst = worst.max((numeric - analytic[i]).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn t_cdf_known_points() {
        // df = 1 is Cauchy.
        assert!((t_cdf(1.0, 1.0) - 0.75).abs() < 1e-10);
        // df = 2 has F(t) = 1/2 + t / (2 sqrt(2 + t²)).
        let t: f64 = 1.3;
        assert!((t_cdf(t, 2.0) - (0.5 + t / (2.0 * (2.0 + t * t).sqrt()))).abs() < 1e-10);
        assert!((t_cdf(-t, 2.0) + t_cdf(t, 2.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn permutations_on_additive_game() {
        // v(S) = Σ_{j∈S} (j + 1): φ_j = j + 1.
        let d = 4;
        let values: Vec<f64> = (0..1usize << d)
            .map(|s| (0..d).filter(|j| s >> j & 1 == 1).map(|j| j as f64 + 1.0).sum())
            .collect();
        assert_eq!(shapley_by_permutations(&values, d), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn brute_force_svr_on_exact_line() {
        // y = x1 exactly, ε = 0: w = (1, 0) and b = 0 fit with zero slack, but
        // a smaller ‖w‖ trades off against C times the slack.
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 0.0]).collect();
        let y: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let (v, w, _) = svr_brute_force(&x, &y, 100.0, 0.0);
        assert!((v - 0.5).abs() < 1e-6, "{v}");
        assert!((w[0] - 1.0).abs() < 1e-5 && w[1].abs() < 1e-5);
    }

    #[test]
    fn solve_small_system() {
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
