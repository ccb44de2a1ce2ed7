//! Posterior model probabilities and Bayes factors from model-specific MCMC
//! output.
//!
//! Every candidate model is mapped onto one shared parameter vector (the
//! palette) by an invertible map. Reversible jump MCMC then becomes plain
//! Gibbs sampling that alternates a palette draw with a draw of the model
//! indicator from its categorical full conditional. Because the palette
//! update only needs draws from each model's own posterior, the models can be
//! fitted one at a time (stage 1) and the model indicator chain run afterwards
//! by post-processing the stored draws (stage 2).
//!
//! Stage 2 offers two estimators: a Markov chain over the model indicator
//! (visit frequencies and the Rao-Blackwellized chain mean of the full
//! conditional probabilities), and the stationary distribution of an averaged
//! model-to-model transition matrix.

pub mod data;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod numeric;
pub mod palette;
pub mod postprocess;
pub mod presets;
pub mod prior;
pub mod rng;
pub mod samplers;

pub use data::Dataset;
pub use error::{Error, ErrorKind, Result};
pub use io::{emit_report, RunConfig};
pub use likelihood::Likelihood;
pub use numeric::log_sum_exp;
pub use palette::{
    apply_bijection, full_conditional_model_probs, invert_bijection, log_psi_prior, Bijection, BoundModelSet,
    LinearBijection, ModelSet, ModelSpec, Palette,
};
pub use postprocess::{
    bayes_factor_matrix, method1, method1_chain, method2, method2_transition, reweight_under_prior, run_stage2,
    stationary_distribution, tune_model_priors, MethodChoice, PosteriorReport, Stage2Settings, TransitionEstimate,
};
pub use prior::{Prior, ProductPrior};
pub use rng::{stream_rng, SimRng};
pub use samplers::{fit_stores, SampleStore, Stage1Settings, ThetaChain};
