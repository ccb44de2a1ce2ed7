//! Data models. A [`Likelihood`] names dataset columns; binding it to a
//! [`Dataset`] resolves them once into flat arrays for the hot loops.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::data::Dataset;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Likelihood {
    /// `y ~ N(b0 + sum_j b_j x_j, sigma2)`, parameters `(b0, b_1.., sigma2)`.
    /// Covariates are centered at their sample mean unless `center = false`.
    NormalLinear {
        response: String,
        covariates: Vec<String>,
        #[serde(default = "default_true")]
        center: bool,
    },
    /// Bernoulli with logit link, parameters `(b0, b_1..)`; each term is the
    /// product of the listed columns, so `["S", "L"]` is an interaction.
    Logistic { response: String, terms: Vec<Vec<String>> },
    /// Independent binomial records; record `i` uses success probability
    /// `theta[groups[i]]`.
    Binomial {
        successes: String,
        trials: String,
        groups: Vec<usize>,
    },
}

impl Likelihood {
    pub fn n_params(&self) -> usize {
        match self {
            Likelihood::NormalLinear { covariates, .. } => covariates.len() + 2,
            Likelihood::Logistic { terms, .. } => terms.len() + 1,
            Likelihood::Binomial { groups, .. } => groups.iter().max().map_or(0, |g| g + 1),
        }
    }

    /// Parameter labels in `theta` order.
    pub fn param_names(&self) -> Vec<String> {
        match self {
            Likelihood::NormalLinear { covariates, .. } => std::iter::once("intercept".to_string())
                .chain(covariates.iter().cloned())
                .chain(std::iter::once("sigma2".to_string()))
                .collect(),
            Likelihood::Logistic { terms, .. } => std::iter::once("intercept".to_string())
                .chain(terms.iter().map(|t| t.join("*")))
                .collect(),
            Likelihood::Binomial { .. } => (1..=self.n_params()).map(|g| format!("p{g}")).collect(),
        }
    }

    /// Column names this likelihood reads.
    pub fn columns(&self) -> Vec<String> {
        let mut out: Vec<String> = match self {
            Likelihood::NormalLinear { response, covariates, .. } => {
                std::iter::once(response).chain(covariates).cloned().collect()
            }
            Likelihood::Logistic { response, terms } => std::iter::once(response)
                .chain(terms.iter().flatten())
                .cloned()
                .collect(),
            Likelihood::Binomial { successes, trials, .. } => vec![successes.clone(), trials.clone()],
        };
        let mut seen = Vec::new();
        out.retain(|c| {
            let fresh = !seen.contains(c);
            seen.push(c.clone());
            fresh
        });
        out
    }

    pub fn bind(&self, data: &Dataset) -> Result<BoundLikelihood> {
        Ok(match self {
            Likelihood::NormalLinear { response, covariates, center } => {
                BoundLikelihood::NormalLinear(RegressionData::from_dataset(data, response, covariates, *center)?)
            }
            Likelihood::Logistic { response, terms } => {
                BoundLikelihood::Logistic(LogisticData::from_dataset(data, response, terms)?)
            }
            Likelihood::Binomial { successes, trials, groups } => {
                BoundLikelihood::Binomial(BinomialData::from_dataset(data, successes, trials, groups)?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub enum BoundLikelihood {
    NormalLinear(RegressionData),
    Logistic(LogisticData),
    Binomial(BinomialData),
}

impl BoundLikelihood {
    pub fn n_params(&self) -> usize {
        match self {
            BoundLikelihood::NormalLinear(d) => d.n_coef() + 1,
            BoundLikelihood::Logistic(d) => d.n_coef(),
            BoundLikelihood::Binomial(d) => d.n_groups,
        }
    }

    /// `log [y | theta]`, `-inf` when theta is outside the parameter space.
    pub fn ln_likelihood(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.n_params());
        match self {
            BoundLikelihood::NormalLinear(d) => {
                let p = d.n_coef();
                d.ln_likelihood(&theta[..p], theta[p])
            }
            BoundLikelihood::Logistic(d) => d.ln_likelihood(theta),
            BoundLikelihood::Binomial(d) => d.ln_likelihood(theta),
        }
    }
}

/// Response vector and row-major design matrix (intercept first).
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub(crate) y: Vec<f64>,
    pub(crate) design: Vec<f64>,
    p: usize,
}

impl RegressionData {
    pub fn from_dataset(data: &Dataset, response: &str, covariates: &[String], center: bool) -> Result<Self> {
        let y = data.column(response)?.to_vec();
        let cols = covariates
            .iter()
            .map(|c| {
                let col = data.column(c)?;
                let shift = if center && !col.is_empty() {
                    col.iter().sum::<f64>() / col.len() as f64
                } else {
                    0.0
                };
                Ok(col.iter().map(|v| v - shift).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_columns(y, &cols))
    }

    /// Design is `[1, cols...]`; no centering is applied here.
    pub fn from_columns(y: Vec<f64>, cols: &[Vec<f64>]) -> Self {
        let n = y.len();
        let p = cols.len() + 1;
        let mut design = Vec::with_capacity(n * p);
        for i in 0..n {
            design.push(1.0);
            design.extend(cols.iter().map(|c| c[i]));
        }
        Self { y, design, p }
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_coef(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.p..(i + 1) * self.p]
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn rss(&self, coef: &[f64]) -> f64 {
        (0..self.n_rows())
            .map(|i| {
                let mu: f64 = self.row(i).iter().zip(coef).map(|(x, b)| x * b).sum();
                (self.y[i] - mu).powi(2)
            })
            .sum()
    }

    pub fn ln_likelihood(&self, coef: &[f64], sigma2: f64) -> f64 {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return f64::NEG_INFINITY;
        }
        let n = self.n_rows() as f64;
        -0.5 * n * (LN_2PI + sigma2.ln()) - 0.5 * self.rss(coef) / sigma2
    }
}

/// Binary response with a row-major design matrix (intercept first).
#[derive(Debug, Clone)]
pub struct LogisticData {
    pub(crate) y: Vec<f64>,
    pub(crate) design: Vec<f64>,
    p: usize,
}

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl LogisticData {
    pub fn from_dataset(data: &Dataset, response: &str, terms: &[Vec<String>]) -> Result<Self> {
        let y = data.column(response)?.to_vec();
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(format!(
                "logistic response '{response}' must be 0/1; record {} is {}",
                i + 1,
                y[i]
            )));
        }
        let mut cols = Vec::with_capacity(terms.len());
        for term in terms {
            if term.is_empty() {
                return Err(Error::InvalidArgument("empty logistic term".into()));
            }
            let mut col = vec![1.0; y.len()];
            for name in term {
                for (c, v) in col.iter_mut().zip(data.column(name)?) {
                    *c *= v;
                }
            }
            cols.push(col);
        }
        let n = y.len();
        let p = cols.len() + 1;
        let mut design = Vec::with_capacity(n * p);
        for i in 0..n {
            design.push(1.0);
            design.extend(cols.iter().map(|c| c[i]));
        }
        Ok(Self { y, design, p })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_coef(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.p..(i + 1) * self.p]
    }

    pub fn linear_predictor(&self, coef: &[f64]) -> Vec<f64> {
        (0..self.n_rows())
            .map(|i| self.row(i).iter().zip(coef).map(|(x, b)| x * b).sum())
            .collect()
    }

    pub fn ln_likelihood_from_eta(&self, eta: &[f64]) -> f64 {
        self.y.iter().zip(eta).map(|(&y, &e)| y * e - softplus(e)).sum()
    }

    pub fn ln_likelihood(&self, coef: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n_rows() {
            let e: f64 = self.row(i).iter().zip(coef).map(|(x, b)| x * b).sum();
            total += self.y[i] * e - softplus(e);
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct BinomialData {
    pub(crate) successes: Vec<f64>,
    pub(crate) trials: Vec<f64>,
    pub(crate) groups: Vec<usize>,
    n_groups: usize,
    ln_choose: f64,
}

impl BinomialData {
    pub fn from_dataset(data: &Dataset, successes: &str, trials: &str, groups: &[usize]) -> Result<Self> {
        Self::new(data.column(successes)?.to_vec(), data.column(trials)?.to_vec(), groups.to_vec())
    }

    pub fn new(successes: Vec<f64>, trials: Vec<f64>, groups: Vec<usize>) -> Result<Self> {
        if successes.len() != trials.len() {
            return Err(Error::dim("binomial trials", successes.len(), trials.len()));
        }
        if groups.len() != successes.len() {
            return Err(Error::dim("binomial groups (one per record)", successes.len(), groups.len()));
        }
        for (i, (&y, &n)) in successes.iter().zip(&trials).enumerate() {
            let int = |v: f64| v >= 0.0 && v.fract() == 0.0;
            if !int(y) || !int(n) || y > n {
                return Err(Error::InvalidArgument(format!(
                    "binomial record {} needs integers 0 <= y <= N, got y = {y}, N = {n}",
                    i + 1
                )));
            }
        }
        let ln_choose = successes
            .iter()
            .zip(&trials)
            .map(|(&y, &n)| ln_gamma(n + 1.0) - ln_gamma(y + 1.0) - ln_gamma(n - y + 1.0))
            .sum();
        let n_groups = groups.iter().max().map_or(0, |g| g + 1);
        Ok(Self {
            successes,
            trials,
            groups,
            n_groups,
            ln_choose,
        })
    }

    /// Total successes and trials pooled per group.
    pub fn group_totals(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0); self.n_groups];
        for ((&y, &n), &g) in self.successes.iter().zip(&self.trials).zip(&self.groups) {
            out[g].0 += y;
            out[g].1 += n;
        }
        out
    }

    pub fn ln_likelihood(&self, p: &[f64]) -> f64 {
        if p.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return f64::NEG_INFINITY;
        }
        let mut total = self.ln_choose;
        for ((&y, &n), &g) in self.successes.iter().zip(&self.trials).zip(&self.groups) {
            total += y * p[g].ln() + (n - y) * (-p[g]).ln_1p();
        }
        total
    }
}
