//! Parameter and supplemental-variable priors.
//!
//! A [`ProductPrior`] is an ordered list of independent blocks, each covering
//! one or more consecutive coordinates. Supports are open, so a probability
//! coordinate sitting exactly on 0 or 1 has log-density `-inf`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// One independent block of a product prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior {
    Normal { mean: f64, sd: f64 },
    Beta { alpha: f64, beta: f64 },
    /// Shape/rate parameterization.
    Gamma { shape: f64, rate: f64 },
    /// Shape/scale parameterization, density proportional to
    /// `x^-(shape+1) exp(-scale/x)`.
    InverseGamma { shape: f64, scale: f64 },
    Uniform { low: f64, high: f64 },
    /// `N(0, 1/(precision_mult * V))` where `V` is the shared hyperparameter.
    HierNormal { precision_mult: f64 },
    MvNormal { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

impl Prior {
    pub fn dim(&self) -> usize {
        match self {
            Prior::MvNormal { mean, .. } => mean.len(),
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let pos = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            Prior::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return bad(format!("normal mean {mean}"));
                }
                pos("normal sd", sd)
            }
            Prior::Beta { alpha, beta } => pos("beta alpha", alpha).and(pos("beta beta", beta)),
            Prior::Gamma { shape, rate } => pos("gamma shape", shape).and(pos("gamma rate", rate)),
            Prior::InverseGamma { shape, scale } => {
                pos("inverse-gamma shape", shape).and(pos("inverse-gamma scale", scale))
            }
            Prior::Uniform { low, high } => {
                if low.is_finite() && high.is_finite() && low < high {
                    Ok(())
                } else {
                    bad(format!("uniform bounds ({low}, {high})"))
                }
            }
            Prior::HierNormal { precision_mult } => pos("precision_mult", precision_mult),
            Prior::MvNormal { ref mean, ref cov } => {
                if mean.is_empty() {
                    return bad("mv_normal with empty mean".into());
                }
                if cov.len() != mean.len() || cov.iter().any(|r| r.len() != mean.len()) {
                    return bad(format!("mv_normal covariance must be {0}x{0}", mean.len()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Block {
    Scalar(Prior),
    MvNormal {
        mean: DVector<f64>,
        chol: DMatrix<f64>,
        log_norm: f64,
    },
}

/// Independent product of prior blocks, validated at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Prior>", into = "Vec<Prior>")]
pub struct ProductPrior {
    spec: Vec<Prior>,
    blocks: Vec<Block>,
    dim: usize,
}

impl PartialEq for ProductPrior {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<Vec<Prior>> for ProductPrior {
    type Error = Error;

    fn try_from(spec: Vec<Prior>) -> Result<Self> {
        let mut blocks = Vec::with_capacity(spec.len());
        for p in &spec {
            p.validate()?;
            let block = match p {
                Prior::MvNormal { mean, cov } => {
                    let k = mean.len();
                    let m = DMatrix::from_fn(k, k, |i, j| cov[i][j]);
                    if (0..k).any(|i| (0..i).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * m[(i, i)].abs().max(1.0))) {
                        return Err(Error::InvalidArgument("mv_normal covariance is not symmetric".into()));
                    }
                    let chol = m
                        .cholesky()
                        .ok_or_else(|| Error::InvalidArgument("mv_normal covariance is not positive definite".into()))?
                        .unpack();
                    let log_det_half: f64 = (0..k).map(|i| chol[(i, i)].ln()).sum();
                    Block::MvNormal {
                        mean: DVector::from_column_slice(mean),
                        chol,
                        log_norm: -0.5 * k as f64 * LN_2PI - log_det_half,
                    }
                }
                other => Block::Scalar(other.clone()),
            };
            blocks.push(block);
        }
        let dim = spec.iter().map(Prior::dim).sum();
        Ok(Self { spec, blocks, dim })
    }
}

impl From<ProductPrior> for Vec<Prior> {
    fn from(p: ProductPrior) -> Self {
        p.spec
    }
}

impl ProductPrior {
    pub fn new(spec: Vec<Prior>) -> Result<Self> {
        Self::try_from(spec)
    }

    /// The zero-dimensional prior.
    pub fn empty() -> Self {
        Self {
            spec: Vec::new(),
            blocks: Vec::new(),
            dim: 0,
        }
    }

    /// `n` independent copies of one scalar prior.
    pub fn iid(prior: Prior, n: usize) -> Result<Self> {
        Self::try_from(vec![prior; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Prior] {
        &self.spec
    }

    pub fn requires_hyper(&self) -> bool {
        self.spec.iter().any(|p| matches!(p, Prior::HierNormal { .. }))
    }

    /// Joint log-density at `x`; `-inf` outside the support.
    pub fn ln_density(&self, x: &[f64], hyper: Option<f64>) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::dim("prior argument", self.dim, x.len()));
        }
        let mut total = 0.0;
        let mut at = 0;
        for block in &self.blocks {
            let lp = match block {
                Block::Scalar(p) => {
                    let v = scalar_ln_density(p, x[at], hyper)?;
                    at += 1;
                    v
                }
                Block::MvNormal { mean, chol, log_norm } => {
                    let k = mean.len();
                    let diff = DVector::from_column_slice(&x[at..at + k]) - mean;
                    at += k;
                    let z = chol
                        .solve_lower_triangular(&diff)
                        .expect("cholesky factor has a positive diagonal");
                    log_norm - 0.5 * z.norm_squared()
                }
            };
            if lp == f64::NEG_INFINITY {
                return Ok(lp);
            }
            total += lp;
        }
        Ok(total)
    }

    pub fn sample<R: Rng + ?Sized>(&self, hyper: Option<f64>, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim);
        for block in &self.blocks {
            match block {
                Block::Scalar(p) => out.push(sample_scalar(p, hyper, rng)?),
                Block::MvNormal { mean, chol, .. } => {
                    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                    out.extend((mean + chol * z).iter());
                }
            }
        }
        Ok(out)
    }
}

fn hyper_precision(precision_mult: f64, hyper: Option<f64>) -> Result<f64> {
    match hyper {
        Some(v) if v > 0.0 && v.is_finite() => Ok(precision_mult * v),
        Some(v) => Err(Error::InvalidArgument(format!("hyperparameter must be positive, got {v}"))),
        None => Err(Error::InvalidArgument(
            "hierarchical normal prior needs the shared hyperparameter".into(),
        )),
    }
}

fn scalar_ln_density(p: &Prior, x: f64, hyper: Option<f64>) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite("NaN prior argument".into()));
    }
    let ninf = f64::NEG_INFINITY;
    Ok(match *p {
        Prior::Normal { mean, sd } => {
            let z = (x - mean) / sd;
            -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
        }
        Prior::Beta { alpha, beta } => {
            if x <= 0.0 || x >= 1.0 {
                ninf
            } else {
                (alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_beta(alpha, beta)
            }
        }
        Prior::Gamma { shape, rate } => {
            if x <= 0.0 || !x.is_finite() {
                ninf
            } else {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
        }
        Prior::InverseGamma { shape, scale } => {
            if x <= 0.0 || !x.is_finite() {
                ninf
            } else {
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
        }
        Prior::Uniform { low, high } => {
            if x <= low || x >= high {
                ninf
            } else {
                -(high - low).ln()
            }
        }
        Prior::HierNormal { precision_mult } => {
            let tau = hyper_precision(precision_mult, hyper)?;
            0.5 * (tau / (2.0 * PI)).ln() - 0.5 * tau * x * x
        }
        Prior::MvNormal { .. } => unreachable!("mv_normal is compiled into its own block"),
    })
}

fn sample_scalar<R: Rng + ?Sized>(p: &Prior, hyper: Option<f64>, rng: &mut R) -> Result<f64> {
    Ok(match *p {
        Prior::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
        Prior::Beta { alpha, beta } => rand_distr::Beta::new(alpha, beta)
            .expect("validated beta parameters")
            .sample(rng),
        Prior::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
            .expect("validated gamma parameters")
            .sample(rng),
        Prior::InverseGamma { shape, scale } => {
            let g: f64 = rand_distr::Gamma::new(shape, 1.0 / scale)
                .expect("validated inverse-gamma parameters")
                .sample(rng);
            1.0 / g
        }
        Prior::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        Prior::HierNormal { precision_mult } => {
            let tau = hyper_precision(precision_mult, hyper)?;
            rng.sample::<f64, _>(StandardNormal) / tau.sqrt()
        }
        Prior::MvNormal { .. } => unreachable!("mv_normal is compiled into its own block"),
    })
}
