//! Independent reference computations for integration tests.
#![allow(dead_code)]

use palette_rjmcmc::{BoundModelSet, SampleStore};
use rand::Rng;
use rand_distr::StandardNormal;

const LANCZOS: [f64; 9] = [
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

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Exact `Pr(pooled | y)` for two binomial groups: separate `Be(a, b)`
/// probabilities against one shared `Be(a, b)` probability.
pub fn binomial_pooled_posterior(y: [f64; 2], n: [f64; 2], a: f64, b: f64, prior_pooled: f64) -> f64 {
    let sep = ln_beta(y[0] + a, n[0] - y[0] + b) + ln_beta(y[1] + a, n[1] - y[1] + b) - 2.0 * ln_beta(a, b);
    let pool = ln_beta(y[0] + y[1] + a, n[0] + n[1] - y[0] - y[1] + b) - ln_beta(a, b);
    let l1 = sep + (1.0 - prior_pooled).ln();
    let l2 = pool + prior_pooled.ln();
    1.0 / (1.0 + (l1 - l2).exp())
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// `ln N(y; mean, cov)`.
fn ln_mvn(y: &[f64], mean: &[f64], cov: &[Vec<f64>]) -> f64 {
    let n = y.len();
    let l = cholesky(cov);
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (y[i] - mean[i] - s) / l[i][i];
    }
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let logdet: f64 = (0..n).map(|i| l[i][i].ln()).sum::<f64>() * 2.0;
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Log marginal likelihood of `y = X beta + e`, `e ~ N(0, s2 I)`, with
/// `beta ~ N(m, S)` independent of `s2 ~ IG(a, b)`. The coefficients are
/// integrated analytically and `s2` by trapezoid quadrature in `log s2`.
pub fn regression_log_marginal(y: &[f64], design: &[Vec<f64>], m: &[f64], s: &[Vec<f64>], a: f64, b: f64) -> f64 {
    let n = y.len();
    let p = m.len();
    let mean: Vec<f64> = design.iter().map(|row| (0..p).map(|j| row[j] * m[j]).sum()).collect();
    let mut xsx = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let mut v = 0.0;
            for j in 0..p {
                for l in 0..p {
                    v += design[i][j] * s[j][l] * design[k][l];
                }
            }
            xsx[i][k] = v;
        }
    }
    let ln_ig = |s2: f64| a * b.ln() - ln_gamma(a) - (a + 1.0) * s2.ln() - b / s2;
    let integrand = |t: f64| {
        let s2 = t.exp();
        let mut cov = xsx.clone();
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] += s2;
        }
        ln_mvn(y, &mean, &cov) + ln_ig(s2) + t
    };
    let (lo, hi, steps) = (-25.0_f64, 15.0_f64, 8000usize);
    let h = (hi - lo) / steps as f64;
    let vals: Vec<f64> = (0..=steps).map(|i| integrand(lo + i as f64 * h)).collect();
    let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * (v - mx).exp()
        })
        .sum();
    mx + (sum * h).ln()
}

/// Kolmogorov-Smirnov distance between a sample and `U(0, 1)`.
pub fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (((i + 1) as f64 / n) - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Random two-model regression problem: `y` depends on `x` or on a
/// correlated `z`.
pub struct RegressionProblem {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn regression_problem<R: Rng>(rng: &mut R) -> RegressionProblem {
    let n = rng.random_range(8..=20);
    let rho: f64 = rng.random_range(0.7..0.95);
    let slope: f64 = rng.random_range(0.3..1.0);
    let use_z = rng.random::<bool>();
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = normal(rng);
        let zi = rho * xi + (1.0 - rho * rho).sqrt() * normal(rng);
        let c = if use_z { zi } else { xi };
        y.push(2.0 + slope * c + normal(rng));
        x.push(xi);
        z.push(zi);
    }
    RegressionProblem { y, x, z }
}

/// Design `[1, c - mean(c)]`.
pub fn centered_design(c: &[f64]) -> Vec<Vec<f64>> {
    let m = c.iter().sum::<f64>() / c.len() as f64;
    c.iter().map(|v| vec![1.0, v - m]).collect()
}

/// Synthetic sex/length logistic data of size `n`, raw (unstandardized).
pub fn synthetic_trout<R: Rng>(rng: &mut R, n: usize, beta: [f64; 3]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut y = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    for _ in 0..n {
        let si = f64::from(u8::from(rng.random::<bool>()));
        let li = 45.0 + 8.0 * normal(rng);
        let eta = beta[0] + beta[1] * (2.0 * si - 1.0) + beta[2] * (li - 45.0) / 8.0;
        let p = 1.0 / (1.0 + (-eta).exp());
        y.push(f64::from(u8::from(rng.random::<f64>() < p)));
        s.push(si);
        l.push(li);
    }
    (y, s, l)
}


/// Batch-means mean and standard error of a series in its stored order.
pub fn series_mean_se(values: &[f64]) -> (f64, f64) {
    let b = 20;
    let len = values.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| values[i * len..(i + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (m, (sample_variance(&means) / b as f64).sqrt())
}

/// For two models: standard error of the posterior probability of model 2
/// induced by the finite stage-1 stores. The transition entries are store
/// averages; the error propagates through `p2 = P12 / (P12 + P21)`.
pub fn store_se(stores: &[SampleStore], bound: &BoundModelSet) -> f64 {
    let mut probs = [0.0; 2];
    let mut cross = [(0.0, 0.0); 2];
    for (h, store) in stores.iter().enumerate() {
        let vals: Vec<f64> = (0..store.len())
            .map(|i| {
                bound.full_conditional(store.row(i), store.hyper(i), &mut probs).unwrap();
                probs[1 - h]
            })
            .collect();
        cross[h] = series_mean_se(&vals);
    }
    let ((p12, se12), (p21, se21)) = (cross[0], cross[1]);
    let s2 = (p12 + p21).powi(2);
    ((p21 / s2 * se12).powi(2) + (p12 / s2 * se21).powi(2)).sqrt()
}
