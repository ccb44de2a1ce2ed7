//! The palette vector, per-model linear bijections, the induced prior on the
//! palette, and the full conditional of the model indicator.
//!
//! Model `k` sees the palette `psi` through `A_k psi = (theta_k, u_k)`, where
//! `theta_k` are its own parameters and `u_k` are supplemental coordinates
//! with a proper prior of their own. The prior on the palette under model `k`
//! is `f_k(A_k psi) |det A_k|`.

use std::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{BoundLikelihood, Likelihood};
use crate::numeric::normalize_log_weights;
use crate::prior::{Prior, ProductPrior};

/// A point in the shared parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Palette(Vec<f64>);

impl Palette {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Palette {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Invertible map from the palette to a model's `(theta, u)` coordinates.
pub trait Bijection {
    fn dim(&self) -> usize;
    fn forward(&self, psi: &[f64], out: &mut [f64]);
    fn inverse(&self, coords: &[f64], out: &mut [f64]);
    /// `log |d forward / d psi|` at `psi`.
    fn ln_abs_det_jacobian(&self, psi: &[f64]) -> f64;
}

/// `Theta = A psi` for an invertible square matrix `A`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LinearBijection {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    ln_abs_det: f64,
}

impl PartialEq for LinearBijection {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl TryFrom<Vec<Vec<f64>>> for LinearBijection {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<LinearBijection> for Vec<Vec<f64>> {
    fn from(b: LinearBijection) -> Self {
        b.rows()
    }
}

impl LinearBijection {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidArgument("bijection matrix is empty".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::dim("bijection matrix row (must be square)", d, r.len()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("bijection matrix entry".into()));
        }
        Self::from_matrix(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let d = matrix.nrows();
        let lu = matrix.clone().lu();
        let u = lu.u();
        let ln_abs_det: f64 = (0..d).map(|i| u[(i, i)].abs().ln()).sum();
        if !ln_abs_det.is_finite() {
            return Err(Error::Singular("bijection matrix has zero determinant".into()));
        }
        let inverse = lu
            .try_inverse()
            .ok_or_else(|| Error::Singular("bijection matrix is not invertible".into()))?;
        let resid = (&matrix * &inverse - DMatrix::<f64>::identity(d, d)).amax();
        if !(resid < 1e-9) {
            return Err(Error::Singular(format!(
                "bijection matrix is numerically singular (|A A^-1 - I| = {resid:e})"
            )));
        }
        Ok(Self {
            matrix,
            inverse,
            ln_abs_det,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: DMatrix::identity(d, d),
            inverse: DMatrix::identity(d, d),
            ln_abs_det: 0.0,
        }
    }

    /// Row `i` of `A` selects palette coordinate `order[i]`.
    pub fn permutation(order: &[usize]) -> Result<Self> {
        let d = order.len();
        let mut seen = vec![false; d];
        for &o in order {
            if o >= d || std::mem::replace(&mut seen[o], true) {
                return Err(Error::InvalidArgument(format!("{order:?} is not a permutation")));
            }
        }
        let rows: Vec<Vec<f64>> = order
            .iter()
            .map(|&o| (0..d).map(|j| if j == o { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn ln_abs_det(&self) -> f64 {
        self.ln_abs_det
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl Bijection for LinearBijection {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn forward(&self, psi: &[f64], out: &mut [f64]) {
        mat_vec(&self.matrix, psi, out);
    }

    fn inverse(&self, coords: &[f64], out: &mut [f64]) {
        mat_vec(&self.inverse, coords, out);
    }

    fn ln_abs_det_jacobian(&self, _psi: &[f64]) -> f64 {
        self.ln_abs_det
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let d = m.nrows();
    for (i, o) in out.iter_mut().enumerate().take(d) {
        *o = (0..d).map(|j| m[(i, j)] * x[j]).sum();
    }
}

/// One candidate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    /// Prior model probability.
    pub weight: f64,
    /// Palette to `(theta, u)` map; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bijection: Option<LinearBijection>,
    /// Prior on `theta`.
    pub prior: ProductPrior,
    /// Prior on the supplemental coordinates `u`.
    #[serde(default = "ProductPrior::empty")]
    pub supplemental: ProductPrior,
    /// Prior on a shared scalar hyperparameter carried beside the palette.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper_prior: Option<Prior>,
    pub likelihood: Likelihood,
}

impl ModelSpec {
    pub fn n_params(&self) -> usize {
        self.likelihood.n_params()
    }

    pub fn n_supplemental(&self) -> usize {
        self.supplemental.dim()
    }

    pub fn palette_dim(&self) -> usize {
        self.n_params() + self.n_supplemental()
    }

    pub fn requires_hyper(&self) -> bool {
        self.prior.requires_hyper() || self.supplemental.requires_hyper() || self.hyper_prior.is_some()
    }

    fn validate(&self) -> Result<()> {
        let ctx = |what: &str| format!("model '{}' {what}", self.name);
        if self.prior.dim() != self.n_params() {
            return Err(Error::dim(ctx("prior dimension"), self.n_params(), self.prior.dim()));
        }
        if self.n_params() == 0 {
            return Err(Error::InvalidArgument(ctx("has no parameters")));
        }
        if let Some(b) = &self.bijection {
            if b.dim() != self.palette_dim() {
                return Err(Error::dim(ctx("bijection size"), self.palette_dim(), b.dim()));
            }
        }
        if let Some(h) = &self.hyper_prior {
            if h.dim() != 1 || matches!(h, Prior::HierNormal { .. }) {
                return Err(Error::InvalidArgument(ctx("hyper_prior must be a scalar fixed prior")));
            }
            ProductPrior::new(vec![h.clone()])?;
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(Error::InvalidArgument(format!("{} = {}", ctx("weight"), self.weight)));
        }
        Ok(())
    }

    fn apply(&self, psi: &[f64], out: &mut [f64]) {
        match &self.bijection {
            Some(b) => b.forward(psi, out),
            None => out.copy_from_slice(psi),
        }
    }

    fn ln_abs_det(&self) -> f64 {
        self.bijection.as_ref().map_or(0.0, LinearBijection::ln_abs_det)
    }
}

/// Splits `A psi` into the model's parameters and supplemental coordinates.
pub fn apply_bijection(model: &ModelSpec, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = model.palette_dim();
    if psi.len() != d {
        return Err(Error::dim(format!("palette for model '{}'", model.name), d, psi.len()));
    }
    let mut coords = vec![0.0; d];
    model.apply(psi, &mut coords);
    let u = coords.split_off(model.n_params());
    Ok((coords, u))
}

pub fn invert_bijection(model: &ModelSpec, theta: &[f64], u: &[f64]) -> Result<Palette> {
    if theta.len() != model.n_params() {
        return Err(Error::dim(format!("theta for model '{}'", model.name), model.n_params(), theta.len()));
    }
    if u.len() != model.n_supplemental() {
        return Err(Error::dim(
            format!("supplemental u for model '{}'", model.name),
            model.n_supplemental(),
            u.len(),
        ));
    }
    let coords: Vec<f64> = theta.iter().chain(u).copied().collect();
    Ok(Palette(match &model.bijection {
        Some(b) => {
            let mut psi = vec![0.0; coords.len()];
            b.inverse(&coords, &mut psi);
            psi
        }
        None => coords,
    }))
}

/// `log f_k(A_k psi) + log|det A_k|`, plus the hyperparameter's own prior
/// when the model declares one. Returns `-inf` outside the support.
pub fn log_psi_prior(model: &ModelSpec, psi: &[f64], hyper: Option<f64>) -> Result<f64> {
    let (theta, u) = apply_bijection(model, psi)?;
    Ok(prior_terms(model, &theta, &u, hyper)? + model.ln_abs_det())
}

fn prior_terms(model: &ModelSpec, theta: &[f64], u: &[f64], hyper: Option<f64>) -> Result<f64> {
    let mut lp = model.prior.ln_density(theta, hyper)?;
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    lp += model.supplemental.ln_density(u, hyper)?;
    if let Some(h) = &model.hyper_prior {
        let v = hyper.ok_or_else(|| {
            Error::InvalidArgument(format!("model '{}' needs the shared hyperparameter", model.name))
        })?;
        lp += ProductPrior::new(vec![h.clone()])?.ln_density(&[v], None)?;
    }
    Ok(lp)
}

/// A validated set of candidate models sharing one palette dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModelSpec>", into = "Vec<ModelSpec>")]
pub struct ModelSet {
    models: Vec<ModelSpec>,
    dim: usize,
}

impl TryFrom<Vec<ModelSpec>> for ModelSet {
    type Error = Error;

    fn try_from(models: Vec<ModelSpec>) -> Result<Self> {
        Self::new(models)
    }
}

impl From<ModelSet> for Vec<ModelSpec> {
    fn from(s: ModelSet) -> Self {
        s.models
    }
}

impl ModelSet {
    /// Validates dimensions and requires prior weights summing to one within 1e-12.
    pub fn new(models: Vec<ModelSpec>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidArgument("model set is empty".into()));
        }
        for m in &models {
            m.validate()?;
        }
        let dim = models.iter().map(ModelSpec::n_params).max().unwrap_or(0);
        for m in &models {
            if m.palette_dim() != dim {
                return Err(Error::dim(
                    format!(
                        "model '{}' parameters + supplemental (palette dimension is the largest model size)",
                        m.name
                    ),
                    dim,
                    m.palette_dim(),
                ));
            }
        }
        let total: f64 = models.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("model weights sum to {total}, not 1")));
        }
        let needs = models.iter().map(ModelSpec::requires_hyper).collect::<Vec<_>>();
        if needs.iter().any(|&n| n) && !needs.iter().all(|&n| n) {
            log::debug!("only some models use the shared hyperparameter");
        }
        Ok(Self { models, dim })
    }

    /// Like [`ModelSet::new`] but rescales the weights to sum to one,
    /// returning whether a rescale was needed.
    pub fn normalized(mut models: Vec<ModelSpec>) -> Result<(Self, bool)> {
        let total: f64 = models.iter().map(|m| m.weight).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument(format!("model weights sum to {total}")));
        }
        let rescaled = (total - 1.0).abs() > 1e-12;
        if rescaled {
            models.iter_mut().for_each(|m| m.weight /= total);
        }
        Ok((Self::new(models)?, rescaled))
    }

    /// Same models under different prior weights (rescaled to sum to one).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::dim("model weights", self.len(), weights.len()));
        }
        let mut models = self.models.clone();
        for (m, &w) in models.iter_mut().zip(weights) {
            m.weight = w;
        }
        Ok(Self::normalized(models)?.0)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }

    pub fn get(&self, k: usize) -> &ModelSpec {
        &self.models[k]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.weight).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.models.iter().map(|m| m.name.clone()).collect()
    }

    pub fn requires_hyper(&self) -> bool {
        self.models.iter().any(ModelSpec::requires_hyper)
    }

    pub fn bind(&self, data: &Dataset) -> Result<BoundModelSet> {
        let likelihoods = self
            .models
            .iter()
            .map(|m| m.likelihood.bind(data))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundModelSet {
            models: self.clone(),
            likelihoods,
            log_weights: self.models.iter().map(|m| m.weight.ln()).collect(),
        })
    }
}

/// A model set with its likelihoods resolved against one dataset.
#[derive(Debug, Clone)]
pub struct BoundModelSet {
    models: ModelSet,
    likelihoods: Vec<BoundLikelihood>,
    log_weights: Vec<f64>,
}

impl BoundModelSet {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.models.dim()
    }

    pub fn model_set(&self) -> &ModelSet {
        &self.models
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Replaces the prior model weights; the input is renormalized.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        self.models = self.models.with_weights(weights)?;
        self.log_weights = self.models.weights().iter().map(|w| w.ln()).collect();
        Ok(())
    }

    /// `log [y | psi, M_k] + log [psi | M_k]` (no model weight).
    pub fn ln_joint(&self, k: usize, psi: &[f64], hyper: Option<f64>) -> Result<f64> {
        let model = self.models.get(k);
        let mut coords = vec![0.0; psi.len()];
        model.apply(psi, &mut coords);
        let (theta, u) = coords.split_at(model.n_params());
        let lp = prior_terms(model, theta, u, hyper)?;
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        Ok(lp + model.ln_abs_det() + self.likelihoods[k].ln_likelihood(theta))
    }

    /// Full conditional probabilities of the model indicator at `psi`.
    pub fn full_conditional(&self, psi: &[f64], hyper: Option<f64>, out: &mut [f64]) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::dim("palette", self.dim(), psi.len()));
        }
        let mut logw = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            logw.push(self.ln_joint(k, psi, hyper)? + self.log_weights[k]);
        }
        if logw.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite(format!("model log weight at psi = {psi:?}")));
        }
        normalize_log_weights(&logw, out).map_err(|e| match e {
            Error::NoMass => Error::DegeneratePalette { psi: psi.to_vec() },
            other => other,
        })
    }
}

/// `Pr(M_k | psi, y)` for every model, normalized in log space.
pub fn full_conditional_model_probs(
    psi: &[f64],
    models: &ModelSet,
    data: &Dataset,
    hyper: Option<f64>,
) -> Result<Vec<f64>> {
    let bound = models.bind(data)?;
    let mut out = vec![0.0; models.len()];
    bound.full_conditional(psi, hyper, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;
    use statrs::function::beta::ln_beta;

    #[test]
    fn halving_bijection_forward_and_inverse() {
        let (models, _) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let m2 = models.get(1);
        let (theta, u) = apply_bijection(m2, &[0.4, 0.5]).unwrap();
        assert!((theta[0] - 0.45).abs() < 1e-15);
        assert_eq!(u, vec![0.5]);
        let psi = invert_bijection(m2, &[0.45], &[0.5]).unwrap();
        assert!((psi[0] - 0.4).abs() < 1e-15 && (psi[1] - 0.5).abs() < 1e-15);
        assert_eq!(m2.bijection.as_ref().unwrap().ln_abs_det(), 0.5f64.ln());
    }

    #[test]
    fn identity_bijection_passes_through() {
        let lik = Likelihood::NormalLinear {
            response: "y".into(),
            covariates: vec!["x".into()],
            center: true,
        };
        let m = ModelSpec {
            name: "m".into(),
            weight: 1.0,
            bijection: Some(LinearBijection::identity(3)),
            prior: ProductPrior::iid(Prior::Normal { mean: 0.0, sd: 1.0 }, 3).unwrap(),
            supplemental: ProductPrior::empty(),
            hyper_prior: None,
            likelihood: lik,
        };
        let (theta, u) = apply_bijection(&m, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(theta, vec![1.0, 2.0, 3.0]);
        assert!(u.is_empty());
        assert_eq!(invert_bijection(&m, &theta, &[]).unwrap().into_inner(), theta);
        assert!(apply_bijection(&m, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn trout_model_one_layout() {
        let models = presets::trout_models(0.2).unwrap();
        let (theta, u) = apply_bijection(models.get(0), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(theta, vec![1.0]);
        assert_eq!(u, vec![2.0, 3.0, 4.0]);
        // model 3 reads beta_2 from the third palette slot
        let (theta, u) = apply_bijection(models.get(2), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(theta, vec![1.0, 3.0]);
        assert_eq!(u, vec![2.0, 4.0]);
    }

    #[test]
    fn psi_prior_with_jacobian() {
        let (models, _) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let m2 = models.get(1);
        let lp = log_psi_prior(m2, &[0.4, 0.5], None).unwrap();
        // Be(0.5; 15, 15) computed directly
        let be = 14.0 * 0.5f64.ln() + 14.0 * 0.5f64.ln() - ln_beta(15.0, 15.0);
        assert!((lp - (be + 0.5f64.ln())).abs() < 1e-12, "{lp}");
        assert_eq!(log_psi_prior(m2, &[2.1, 0.1], None).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn singular_bijection_rejected() {
        assert!(matches!(
            LinearBijection::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]),
            Err(Error::Singular(_))
        ));
        assert!(LinearBijection::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(LinearBijection::permutation(&[0, 0]).is_err());
    }

    #[test]
    fn single_model_probability_is_one() {
        let (models, data) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let one = ModelSet::new(vec![ModelSpec {
            weight: 1.0,
            ..models.get(0).clone()
        }])
        .unwrap();
        let p = full_conditional_model_probs(&[0.3, 0.6], &one, &data, None).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn binomial_full_conditional_matches_displayed_formulas() {
        let (models, data) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let (p1, p2) = (0.4, 0.5);
        let p = full_conditional_model_probs(&[p1, p2], &models, &data, None).unwrap();
        // model 1: p1^8 (1-p1)^12 p2^16 (1-p2)^14 under U(0,1) priors
        let w1 = 8.0 * f64::ln(p1) + 12.0 * f64::ln(1.0 - p1) + 16.0 * f64::ln(p2) + 14.0 * f64::ln(1.0 - p2);
        // model 2: pi^24 (1-pi)^26 * Be(u; 15, 15) * 1/2
        let pi = (p1 + p2) / 2.0;
        let w2 = 24.0 * pi.ln() + 26.0 * (1.0 - pi).ln() + 28.0 * 0.5f64.ln() - ln_beta(15.0, 15.0) + 0.5f64.ln();
        let expect2 = 1.0 / (1.0 + (w1 - w2).exp());
        assert!((p[1] - expect2).abs() < 1e-12, "{} vs {expect2}", p[1]);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_palette_point() {
        let (models, data) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let err = full_conditional_model_probs(&[1.5, 1.5], &models, &data, None).unwrap_err();
        assert!(matches!(err, Error::DegeneratePalette { .. }));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let (models, _) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let mut specs: Vec<ModelSpec> = models.models().to_vec();
        specs[0].weight = 0.7;
        assert!(ModelSet::new(specs.clone()).is_err());
        let (set, rescaled) = ModelSet::normalized(specs).unwrap();
        assert!(rescaled);
        assert!((set.weights()[0] - 0.7 / 1.2).abs() < 1e-15);
    }

    fn well_conditioned() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6).prop_flat_map(|d| {
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), d).prop_map(move |mut rows| {
                // diagonal dominance keeps the condition number bounded
                for (i, r) in rows.iter_mut().enumerate() {
                    r[i] += if r[i] >= 0.0 { d as f64 } else { -(d as f64) };
                }
                rows
            })
        })
    }

    proptest! {
        #[test]
        fn random_linear_bijection_round_trip(rows in well_conditioned(), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let d = rows.len();
            let b = LinearBijection::from_rows(&rows).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let coords: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
            let mut psi = vec![0.0; d];
            b.inverse(&coords, &mut psi);
            let mut back = vec![0.0; d];
            b.forward(&psi, &mut back);
            for (a, c) in back.iter().zip(&coords) {
                prop_assert!((a - c).abs() < 1e-10 * (1.0 + c.abs()));
            }
            let det = b.matrix().determinant();
            prop_assert!((b.ln_abs_det() - det.abs().ln()).abs() < 1e-12 * (1.0 + det.abs().ln().abs()));
        }

        #[test]
        fn prior_weight_scaling_is_invisible(scale in 0.01f64..100.0, p1 in 0.05f64..0.95, p2 in 0.05f64..0.95) {
            let (models, data) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
            let w: Vec<f64> = models.weights().iter().map(|w| w * scale).collect();
            let rescaled = models.with_weights(&w).unwrap();
            let a = full_conditional_model_probs(&[p1, p2], &models, &data, None).unwrap();
            let b = full_conditional_model_probs(&[p1, p2], &rescaled, &data, None).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
