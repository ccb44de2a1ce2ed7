//! Two-block Gibbs sampler for normal linear regression with independent
//! normal coefficient and inverse-gamma variance priors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::RegressionData;
use crate::prior::Prior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateRegressionConfig {
    pub coef_prior_mean: Vec<f64>,
    pub coef_prior_covariance: Vec<Vec<f64>>,
    /// Inverse-gamma shape `a`.
    pub variance_prior_shape: f64,
    /// Inverse-gamma scale `b`; density proportional to `s^-(a+1) exp(-b/s)`.
    pub variance_prior_scale: f64,
}

impl ConjugateRegressionConfig {
    /// Reads the configuration off a prior laid out as coefficient blocks
    /// (one `mv_normal` or independent `normal`s) followed by an
    /// `inverse_gamma` on the variance.
    pub fn from_priors(priors: &[Prior]) -> Option<Self> {
        let (last, coef) = priors.split_last()?;
        let Prior::InverseGamma { shape, scale } = *last else {
            return None;
        };
        let (mean, cov) = match coef {
            [Prior::MvNormal { mean, cov }] => (mean.clone(), cov.clone()),
            blocks => {
                let mut mean = Vec::new();
                let mut sds = Vec::new();
                for b in blocks {
                    let Prior::Normal { mean: m, sd } = *b else {
                        return None;
                    };
                    mean.push(m);
                    sds.push(sd);
                }
                let k = sds.len();
                let cov = (0..k)
                    .map(|i| (0..k).map(|j| if i == j { sds[i] * sds[i] } else { 0.0 }).collect())
                    .collect();
                (mean, cov)
            }
        };
        Some(Self {
            coef_prior_mean: mean,
            coef_prior_covariance: cov,
            variance_prior_shape: shape,
            variance_prior_scale: scale,
        })
    }
}

/// Retained draws; `coefficients[i]` pairs with `sigma2[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionChain {
    pub coefficients: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
}

impl RegressionChain {
    /// Rows of `(coefficients..., sigma2)`.
    pub fn theta_rows(&self) -> Vec<Vec<f64>> {
        self.coefficients
            .iter()
            .zip(&self.sigma2)
            .map(|(c, &s)| c.iter().copied().chain(std::iter::once(s)).collect())
            .collect()
    }
}

/// Alternates `coef | sigma2 ~ N(Q^-1 (P0 m + X'y / s), Q^-1)` with
/// `Q = P0 + X'X / s`, and `sigma2 | coef ~ IG(a + n/2, b + RSS/2)`.
pub fn gibbs_linear_regression<R: Rng + ?Sized>(
    data: &RegressionData,
    config: &ConjugateRegressionConfig,
    iters: usize,
    burnin: usize,
    rng: &mut R,
) -> Result<RegressionChain> {
    if iters <= burnin {
        return Err(Error::InvalidArgument(format!("iterations ({iters}) must exceed burn-in ({burnin})")));
    }
    let n = data.n_rows();
    let p = data.n_coef();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("regression needs at least 2 records, got {n}")));
    }
    if config.coef_prior_mean.len() != p {
        return Err(Error::dim("coefficient prior mean", p, config.coef_prior_mean.len()));
    }
    let (a, b) = (config.variance_prior_shape, config.variance_prior_scale);
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("inverse-gamma ({a}, {b}) must be positive")));
    }
    let cov = &config.coef_prior_covariance;
    if cov.len() != p || cov.iter().any(|r| r.len() != p) {
        return Err(Error::dim("coefficient prior covariance", p, cov.len()));
    }
    let prior_prec = DMatrix::from_fn(p, p, |i, j| cov[i][j])
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("coefficient prior covariance is not positive definite".into()))?
        .inverse();
    let prior_mean = DVector::from_column_slice(&config.coef_prior_mean);
    let prior_shift = &prior_prec * &prior_mean;

    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for i in 0..n {
        let row = data.row(i);
        for j in 0..p {
            xty[j] += row[j] * data.y[i];
            for k in 0..p {
                xtx[(j, k)] += row[j] * row[k];
            }
        }
    }

    let post_shape = a + n as f64 / 2.0;
    let mut coef = prior_mean.clone();
    let keep = iters - burnin;
    let mut out = RegressionChain {
        coefficients: Vec::with_capacity(keep),
        sigma2: Vec::with_capacity(keep),
    };
    for it in 0..iters {
        let rss = data.rss(coef.as_slice());
        let rate = b + 0.5 * rss;
        let g: f64 = Gamma::new(post_shape, 1.0 / rate)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(rng);
        let sigma2 = 1.0 / g;

        let precision = &prior_prec + &xtx / sigma2;
        let chol = precision
            .cholesky()
            .ok_or_else(|| Error::Singular("posterior coefficient precision".into()))?;
        let mean = chol.solve(&(&prior_shift + &xty / sigma2));
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        // L L' = Q, so L'^-1 z has covariance Q^-1
        let dev = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Singular("posterior coefficient precision".into()))?;
        coef = mean + dev;

        if it >= burnin {
            out.coefficients.push(coef.iter().copied().collect());
            out.sigma2.push(sigma2);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Batch-means standard error.
    fn mc_se(v: &[f64]) -> f64 {
        let b = 20;
        let len = v.len() / b;
        let means: Vec<f64> = (0..b).map(|i| mean(&v[i * len..(i + 1) * len])).collect();
        let m = mean(&means);
        (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b as f64 - 1.0) / b as f64).sqrt()
    }

    fn toy() -> RegressionData {
        let x = vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0, -0.5, 0.7];
        let y = vec![-3.1, -0.9, 1.2, 2.8, 5.2, 7.1, 0.1, 2.3];
        RegressionData::from_columns(y, &[x])
    }

    #[test]
    fn vague_prior_recovers_least_squares() {
        let data = toy();
        // closed-form least squares
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        let n = data.n_rows() as f64;
        for i in 0..data.n_rows() {
            let (x, y) = (data.row(i)[1], data.y[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;

        let cfg = ConjugateRegressionConfig {
            coef_prior_mean: vec![0.0, 0.0],
            coef_prior_covariance: vec![vec![1e9, 0.0], vec![0.0, 1e9]],
            variance_prior_shape: 0.01,
            variance_prior_scale: 0.01,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chain = gibbs_linear_regression(&data, &cfg, 60_000, 1_000, &mut rng).unwrap();
        let b0: Vec<f64> = chain.coefficients.iter().map(|c| c[0]).collect();
        let b1: Vec<f64> = chain.coefficients.iter().map(|c| c[1]).collect();
        assert!((mean(&b0) - intercept).abs() < 3.0 * mc_se(&b0), "{} vs {intercept}", mean(&b0));
        assert!((mean(&b1) - slope).abs() < 3.0 * mc_se(&b1), "{} vs {slope}", mean(&b1));
    }

    #[test]
    fn exact_fit_two_points_follows_variance_prior() {
        let data = RegressionData::from_columns(vec![1.0, 3.0], &[vec![-1.0, 1.0]]);
        let cfg = ConjugateRegressionConfig {
            coef_prior_mean: vec![0.0, 0.0],
            coef_prior_covariance: vec![vec![1e10, 0.0], vec![0.0, 1e10]],
            variance_prior_shape: 6.0,
            variance_prior_scale: 5.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let chain = gibbs_linear_regression(&data, &cfg, 100_000, 1_000, &mut rng).unwrap();
        let m = mean(&chain.sigma2);
        let prior_mean = 5.0 / (6.0 - 1.0);
        assert!((m / prior_mean - 1.0).abs() < 0.03, "{m}");
    }

    #[test]
    fn inverse_gamma_prior_moments_from_mean_and_sd() {
        // mean = sd = 300^2 forces shape 3 and scale 180000
        let (a, b): (f64, f64) = (3.0, 180_000.0);
        assert_eq!(b / (a - 1.0), 90_000.0);
        assert_eq!(b / ((a - 1.0) * (a - 2.0).sqrt()), 90_000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let gamma = Gamma::new(a, 1.0 / b).unwrap();
        let n = 400_000;
        let draws: Vec<f64> = (0..n).map(|_| 1.0 / gamma.sample(&mut rng)).collect();
        assert!((mean(&draws) / 90_000.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn sigma2_subchain_matches_conditional_moments() {
        // with the coefficients pinned by a tight prior, sigma2 | y is exactly
        // IG(a + n/2, b + RSS/2) at the pinned coefficients
        let data = toy();
        let pin = [1.0, 2.0];
        let cfg = ConjugateRegressionConfig {
            coef_prior_mean: pin.to_vec(),
            coef_prior_covariance: vec![vec![1e-14, 0.0], vec![0.0, 1e-14]],
            variance_prior_shape: 3.0,
            variance_prior_scale: 2.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let chain = gibbs_linear_regression(&data, &cfg, 50_000, 100, &mut rng).unwrap();
        let shape = 3.0 + 4.0;
        let scale = 2.0 + 0.5 * data.rss(&pin);
        let analytic = scale / (shape - 1.0);
        let m = mean(&chain.sigma2);
        assert!((m - analytic).abs() < 3.0 * mc_se(&chain.sigma2), "{m} vs {analytic}");
    }

    #[test]
    fn reads_prior_layout() {
        let cfg = ConjugateRegressionConfig::from_priors(&[
            Prior::Normal { mean: 1.0, sd: 2.0 },
            Prior::Normal { mean: 0.0, sd: 3.0 },
            Prior::InverseGamma { shape: 3.0, scale: 4.0 },
        ])
        .unwrap();
        assert_eq!(cfg.coef_prior_covariance, vec![vec![4.0, 0.0], vec![0.0, 9.0]]);
        assert!(ConjugateRegressionConfig::from_priors(&[Prior::Normal { mean: 1.0, sd: 2.0 }]).is_none());
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = ConjugateRegressionConfig {
            coef_prior_mean: vec![0.0, 0.0],
            coef_prior_covariance: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            variance_prior_shape: 3.0,
            variance_prior_scale: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = RegressionData::from_columns(vec![1.0], &[vec![1.0]]);
        assert!(gibbs_linear_regression(&one, &cfg, 10, 0, &mut rng).is_err());
        assert!(gibbs_linear_regression(&toy(), &cfg, 10, 10, &mut rng).is_err());
    }
}
