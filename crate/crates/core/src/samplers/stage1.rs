//! Per-model posterior sampling: picks a built-in sampler from the model's
//! likelihood and prior families, runs independent chains, and converts the
//! retained draws into palette stores.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conjugate::sample_beta_posterior;
use super::logistic::{mh_logistic_hierarchical, HierarchicalLogisticConfig};
use super::regression::{gibbs_linear_regression, ConjugateRegressionConfig};
use super::store::{build_psi_store, SampleStore, StoreMeta, ThetaChain};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{BinomialData, Likelihood, LogisticData, RegressionData};
use crate::palette::{ModelSet, ModelSpec};
use crate::prior::Prior;
use crate::rng::{stream_id, stream_rng, DOMAIN_STAGE1, DOMAIN_SUPPLEMENTAL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage1Settings {
    pub chains: usize,
    pub iterations: usize,
    pub burnin: usize,
    pub proposal_scale: f64,
}

impl Default for Stage1Settings {
    fn default() -> Self {
        Self {
            chains: 3,
            iterations: 60_000,
            burnin: 10_000,
            proposal_scale: 0.2,
        }
    }
}

impl Stage1Settings {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::InvalidArgument("stage 1 needs at least one chain".into()));
        }
        if self.iterations <= self.burnin {
            return Err(Error::InvalidArgument(format!(
                "stage 1 iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burnin
            )));
        }
        if !(self.proposal_scale > 0.0) {
            return Err(Error::InvalidArgument("proposal_scale must be positive".into()));
        }
        Ok(())
    }
}

/// The built-in sampler matching a model's families.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage1Sampler {
    /// Independent beta posteriors, one per binomial group.
    ConjugateBeta { alpha: Vec<f64>, beta: Vec<f64> },
    Regression(ConjugateRegressionConfig),
    Logistic(HierarchicalLogisticConfig),
}

pub fn select_sampler(model: &ModelSpec, settings: &Stage1Settings) -> Result<Stage1Sampler> {
    let priors = model.prior.components();
    let none = || {
        Error::Config(format!(
            "model '{}': no built-in sampler for this likelihood/prior combination; supply a chain CSV",
            model.name
        ))
    };
    match &model.likelihood {
        Likelihood::Binomial { .. } => {
            let (alpha, beta) = priors
                .iter()
                .map(|p| match *p {
                    Prior::Beta { alpha, beta } => Some((alpha, beta)),
                    Prior::Uniform { low, high } if low == 0.0 && high == 1.0 => Some((1.0, 1.0)),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(none)?
                .into_iter()
                .unzip();
            Ok(Stage1Sampler::ConjugateBeta { alpha, beta })
        }
        Likelihood::NormalLinear { .. } => ConjugateRegressionConfig::from_priors(priors)
            .map(Stage1Sampler::Regression)
            .ok_or_else(none),
        Likelihood::Logistic { .. } => {
            let mults: Vec<f64> = priors
                .iter()
                .map(|p| match *p {
                    Prior::HierNormal { precision_mult } => Some(precision_mult),
                    _ => None,
                })
                .collect::<Option<_>>()
                .ok_or_else(none)?;
            let m = mults[0];
            if mults.iter().any(|&x| x != m) {
                return Err(none());
            }
            let Some(Prior::Gamma { shape, rate }) = model.hyper_prior else {
                return Err(none());
            };
            Ok(Stage1Sampler::Logistic(HierarchicalLogisticConfig {
                precision_mult: m,
                v_prior_shape: shape,
                v_prior_rate: rate,
                proposal_scale: settings.proposal_scale,
            }))
        }
    }
}

fn run_chain(
    model: &ModelSpec,
    sampler: &Stage1Sampler,
    data: &Dataset,
    settings: &Stage1Settings,
    seed: u64,
    stream: u64,
) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>)> {
    let mut rng = stream_rng(seed, stream);
    let keep = settings.iterations - settings.burnin;
    match sampler {
        Stage1Sampler::ConjugateBeta { alpha, beta } => {
            let Likelihood::Binomial { successes, trials, groups } = &model.likelihood else {
                unreachable!()
            };
            let totals = BinomialData::from_dataset(data, successes, trials, groups)?.group_totals();
            let draws = (0..keep)
                .map(|_| {
                    totals
                        .iter()
                        .zip(alpha.iter().zip(beta))
                        .map(|(&(y, n), (&a, &b))| sample_beta_posterior(y as u64, n as u64, a, b, &mut rng))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((draws, None))
        }
        Stage1Sampler::Regression(cfg) => {
            let Likelihood::NormalLinear { response, covariates, center } = &model.likelihood else {
                unreachable!()
            };
            let rd = RegressionData::from_dataset(data, response, covariates, *center)?;
            let chain = gibbs_linear_regression(&rd, cfg, settings.iterations, settings.burnin, &mut rng)?;
            Ok((chain.theta_rows(), None))
        }
        Stage1Sampler::Logistic(cfg) => {
            let Likelihood::Logistic { response, terms } = &model.likelihood else {
                unreachable!()
            };
            let ld = LogisticData::from_dataset(data, response, terms)?;
            let chain = mh_logistic_hierarchical(&ld, cfg, settings.iterations, settings.burnin, &mut rng)?;
            log::info!(
                "model '{}': coefficient acceptance rate {:.3}",
                model.name,
                chain.acceptance_rate
            );
            Ok((chain.coefficients, Some(chain.v)))
        }
    }
}

/// Runs `settings.chains` independent chains for model `index` and pools the
/// retained draws in chain order.
pub fn fit_model(
    model: &ModelSpec,
    index: usize,
    data: &Dataset,
    settings: &Stage1Settings,
    seed: u64,
) -> Result<ThetaChain> {
    settings.validate()?;
    let sampler = select_sampler(model, settings)?;
    let chains = (0..settings.chains)
        .into_par_iter()
        .map(|c| {
            let stream = stream_id(DOMAIN_STAGE1, index * 1024 + c);
            run_chain(model, &sampler, data, settings, seed, stream)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut draws = Vec::new();
    let mut hyper: Option<Vec<f64>> = None;
    for (d, h) in chains {
        draws.extend(d);
        if let Some(h) = h {
            hyper.get_or_insert_with(Vec::new).extend(h);
        }
    }
    Ok(ThetaChain {
        names: model.likelihood.param_names(),
        draws,
        hyper,
    })
}

/// Palette store for model `index` from a parameter chain.
pub fn store_from_chain(model: &ModelSpec, index: usize, chain: &ThetaChain, seed: u64) -> Result<SampleStore> {
    if chain.draws.iter().any(|r| r.len() != model.n_params()) {
        return Err(Error::dim(
            format!("parameter chain for model '{}'", model.name),
            model.n_params(),
            chain.draws.iter().find(|r| r.len() != model.n_params()).map_or(0, Vec::len),
        ));
    }
    if model.requires_hyper() && chain.hyper.is_none() {
        return Err(Error::Config(format!(
            "model '{}' uses the shared hyperparameter; its chain needs a V column",
            model.name
        )));
    }
    let mut rng = stream_rng(seed, stream_id(DOMAIN_SUPPLEMENTAL, index));
    let mut store = build_psi_store(model, index, chain, &mut rng)?;
    store.meta.seed = Some(seed);
    Ok(store)
}

/// Fits every model and returns one palette store per model.
pub fn fit_stores(models: &ModelSet, data: &Dataset, settings: &Stage1Settings, seed: u64) -> Result<Vec<SampleStore>> {
    models
        .models()
        .par_iter()
        .enumerate()
        .map(|(k, m)| {
            let chain = fit_model(m, k, data, settings, seed)?;
            let mut store = store_from_chain(m, k, &chain, seed)?;
            store.meta = StoreMeta {
                draws: store.len(),
                burnin: settings.burnin,
                chains: settings.chains,
                seed: Some(seed),
            };
            Ok(store)
        })
        .collect()
}
