//! Componentwise random-walk Metropolis for logistic regression with
//! coefficients `N(0, 1/(n_k V))` and a conjugate Gamma update of `V`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{softplus, LogisticData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalLogisticConfig {
    /// `n_k`: coefficient precision is `n_k * V`.
    pub precision_mult: f64,
    pub v_prior_shape: f64,
    pub v_prior_rate: f64,
    /// Standard deviation of the random-walk step.
    pub proposal_scale: f64,
}

impl Default for HierarchicalLogisticConfig {
    fn default() -> Self {
        Self {
            precision_mult: 1.0,
            v_prior_shape: 3.29,
            v_prior_rate: 7.80,
            proposal_scale: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticChain {
    pub coefficients: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    /// Fraction of accepted coefficient proposals over all iterations.
    pub acceptance_rate: f64,
}

/// `min(1, exp(log_ratio))`.
pub fn metropolis_accept_prob(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// Full conditional of `V` given the coefficients:
/// `Ga(shape + m/2, rate + n_k * sum(b^2) / 2)`.
pub fn sample_v_conditional<R: Rng + ?Sized>(
    coef: &[f64],
    config: &HierarchicalLogisticConfig,
    rng: &mut R,
) -> Result<f64> {
    let ss: f64 = coef.iter().map(|b| b * b).sum();
    let shape = config.v_prior_shape + coef.len() as f64 / 2.0;
    let rate = config.v_prior_rate + 0.5 * config.precision_mult * ss;
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn mh_logistic_hierarchical<R: Rng + ?Sized>(
    data: &LogisticData,
    config: &HierarchicalLogisticConfig,
    iters: usize,
    burnin: usize,
    rng: &mut R,
) -> Result<LogisticChain> {
    if iters <= burnin {
        return Err(Error::InvalidArgument(format!("iterations ({iters}) must exceed burn-in ({burnin})")));
    }
    let c = config;
    if !(c.precision_mult >= 1.0 && c.v_prior_shape > 0.0 && c.v_prior_rate > 0.0 && c.proposal_scale > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid hierarchical logistic config {c:?}")));
    }
    let p = data.n_coef();
    let n = data.n_rows();
    let mut coef = vec![0.0; p];
    let mut v = c.v_prior_shape / c.v_prior_rate;
    let mut eta = vec![0.0; n];
    let mut ll = data.ln_likelihood_from_eta(&eta);
    let mut proposal_eta = vec![0.0; n];
    let mut accepted = 0usize;

    let keep = iters - burnin;
    let mut out = LogisticChain {
        coefficients: Vec::with_capacity(keep),
        v: Vec::with_capacity(keep),
        acceptance_rate: 0.0,
    };
    for it in 0..iters {
        let tau = c.precision_mult * v;
        for j in 0..p {
            let step = c.proposal_scale * rng.sample::<f64, _>(StandardNormal);
            let proposed = coef[j] + step;
            let mut new_ll = 0.0;
            for i in 0..n {
                let e = eta[i] + step * data.row(i)[j];
                proposal_eta[i] = e;
                new_ll += data.y[i] * e - softplus(e);
            }
            let log_ratio = new_ll - ll - 0.5 * tau * (proposed * proposed - coef[j] * coef[j]);
            if rng.random::<f64>() < metropolis_accept_prob(log_ratio) {
                coef[j] = proposed;
                ll = new_ll;
                std::mem::swap(&mut eta, &mut proposal_eta);
                accepted += 1;
            }
        }
        v = sample_v_conditional(&coef, c, rng)?;
        if it >= burnin {
            out.coefficients.push(coef.clone());
            out.v.push(v);
        }
    }
    out.acceptance_rate = accepted as f64 / (iters * p.max(1)) as f64;
    Ok(out)
}
