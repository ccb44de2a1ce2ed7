//! Stage 1: model-by-model posterior sampling and palette stores.

pub mod conjugate;
pub mod logistic;
pub mod regression;
pub mod stage1;
pub mod store;

pub use conjugate::sample_beta_posterior;
pub use logistic::{mh_logistic_hierarchical, HierarchicalLogisticConfig, LogisticChain};
pub use regression::{gibbs_linear_regression, ConjugateRegressionConfig, RegressionChain};
pub use stage1::{fit_model, fit_stores, select_sampler, store_from_chain, Stage1Sampler, Stage1Settings};
pub use store::{build_psi_store, sample_supplemental, SampleStore, StoreMeta, ThetaChain};
