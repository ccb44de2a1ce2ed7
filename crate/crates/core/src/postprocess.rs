//! Stage 2: posterior model probabilities from per-model palette stores.
//!
//! Method 1 runs a Gibbs chain over the model indicator, drawing the palette
//! from the current model's store. Method 2 averages the full conditional
//! over each store to form a model-to-model transition matrix and returns its
//! stationary distribution.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{normalize_log_weights, sample_categorical, std_error_of_batches, BatchMeans, CompensatedSum, DEFAULT_BATCHES};
use crate::palette::BoundModelSet;
use crate::rng::{stream_id, stream_rng, SimRng, DOMAIN_STAGE2};
use crate::samplers::SampleStore;

/// One recorded point of a cumulative trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// 1-based iteration index within the chain, burn-in included.
    pub iteration: usize,
    /// Running Rao-Blackwellized estimate over post-burn-in iterations.
    pub probs: Vec<f64>,
}

/// Output of one Method 1 chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    /// 1-based.
    pub initial_model: usize,
    /// 1-based model occupied after the last iteration.
    pub final_model: usize,
    pub iterations: usize,
    pub burnin: usize,
    pub visits: Vec<u64>,
    pub probs_indicator: Vec<f64>,
    pub probs_rao_blackwell: Vec<f64>,
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub batch_indicator: Vec<Vec<f64>>,
    #[serde(skip)]
    pub batch_rao_blackwell: Vec<Vec<f64>>,
}

fn check_stores(stores: &[SampleStore], bound: &BoundModelSet) -> Result<()> {
    if stores.len() != bound.len() {
        return Err(Error::dim("sample stores (one per model)", bound.len(), stores.len()));
    }
    let needs_hyper = bound.model_set().requires_hyper();
    for (k, s) in stores.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::EmptyStore(k + 1));
        }
        if s.dim() != bound.dim() {
            return Err(Error::dim(format!("palette store for model {}", k + 1), bound.dim(), s.dim()));
        }
        if needs_hyper && !s.has_hyper() {
            return Err(Error::Config(format!(
                "store for model {} lacks the shared hyperparameter column V",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Runs one Method 1 chain of `iterations` steps from `initial_model`
/// (0-based), discarding the first `burnin` before averaging.
///
/// Every `trace_stride`-th post-burn-in iteration (and the last one) is kept
/// in the cumulative trace.
pub fn method1_chain<R: Rng + ?Sized>(
    stores: &[SampleStore],
    bound: &BoundModelSet,
    iterations: usize,
    burnin: usize,
    initial_model: usize,
    trace_stride: usize,
    rng: &mut R,
) -> Result<ChainRun> {
    check_stores(stores, bound)?;
    let k_models = bound.len();
    if initial_model >= k_models {
        return Err(Error::InvalidArgument(format!(
            "initial model {} outside 1..={k_models}",
            initial_model + 1
        )));
    }
    if iterations <= burnin {
        return Err(Error::NoPostBurnin);
    }
    let stride = trace_stride.max(1);
    let kept = iterations - burnin;
    let mut rb = BatchMeans::new(k_models, kept, DEFAULT_BATCHES);
    let mut ind = BatchMeans::new(k_models, kept, DEFAULT_BATCHES);
    let mut visits = vec![0u64; k_models];
    let mut trace = Vec::with_capacity(kept / stride + 1);
    let mut probs = vec![0.0; k_models];
    let mut onehot = vec![0.0; k_models];
    let mut current = initial_model;
    for j in 0..iterations {
        let (psi, hyper) = stores[current].draw(rng);
        bound.full_conditional(psi, hyper, &mut probs)?;
        let next = sample_categorical(&probs, rng);
        if j >= burnin {
            rb.push(&probs);
            onehot[current] = 1.0;
            ind.push(&onehot);
            onehot[current] = 0.0;
            visits[current] += 1;
            let t = j - burnin + 1;
            if t % stride == 0 || j + 1 == iterations {
                trace.push(TraceRow {
                    iteration: j + 1,
                    probs: rb.mean(),
                });
            }
        }
        current = next;
    }
    Ok(ChainRun {
        initial_model: initial_model + 1,
        final_model: current + 1,
        iterations,
        burnin,
        visits,
        probs_indicator: ind.mean(),
        probs_rao_blackwell: rb.mean(),
        trace,
        batch_indicator: ind.batch_means(),
        batch_rao_blackwell: rb.batch_means(),
    })
}

/// Pooled Method 1 estimates over several chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method1Result {
    pub iterations: usize,
    pub burnin: usize,
    pub probs_indicator: Vec<f64>,
    pub probs_rao_blackwell: Vec<f64>,
    pub se_indicator: Option<Vec<f64>>,
    pub se_rao_blackwell: Option<Vec<f64>>,
    pub visits: Vec<u64>,
    pub chains: Vec<ChainRun>,
}

impl Method1Result {
    /// 1-based indices of models no chain ever occupied after burn-in.
    pub fn never_visited(&self) -> Vec<usize> {
        self.visits
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0)
            .map(|(k, _)| k + 1)
            .collect()
    }
}

fn pooled_se(batches: impl Iterator<Item = Vec<f64>>) -> Option<Vec<f64>> {
    let all: Vec<Vec<f64>> = batches.collect();
    (all.len() >= 2).then(|| std_error_of_batches(&all))
}

fn average_rows<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, dim: usize) -> Vec<f64> {
    let mut sums = vec![CompensatedSum::new(); dim];
    let mut n = 0usize;
    for r in rows {
        for (s, &v) in sums.iter_mut().zip(r) {
            s.add(v);
        }
        n += 1;
    }
    sums.iter().map(|s| s.value() / n.max(1) as f64).collect()
}

/// Runs one chain per entry of `initial_models` (0-based) in parallel and
/// pools them. Chain seeds are drawn from `rng` up front, so the result does
/// not depend on scheduling.
pub fn method1<R: Rng + ?Sized>(
    stores: &[SampleStore],
    bound: &BoundModelSet,
    iterations: usize,
    burnin: usize,
    initial_models: &[usize],
    trace_stride: usize,
    rng: &mut R,
) -> Result<Method1Result> {
    if initial_models.is_empty() {
        return Err(Error::InvalidArgument("method 1 needs at least one chain".into()));
    }
    let seeds: Vec<u64> = initial_models.iter().map(|_| rng.random()).collect();
    let chains = initial_models
        .par_iter()
        .zip(seeds)
        .map(|(&init, seed)| {
            let mut r = SimRng::seed_from_u64(seed);
            method1_chain(stores, bound, iterations, burnin, init, trace_stride, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = bound.len();
    let mut visits = vec![0u64; k];
    for c in &chains {
        for (v, &cv) in visits.iter_mut().zip(&c.visits) {
            *v += cv;
        }
    }
    Ok(Method1Result {
        iterations,
        burnin,
        probs_indicator: average_rows(chains.iter().map(|c| &c.probs_indicator), k),
        probs_rao_blackwell: average_rows(chains.iter().map(|c| &c.probs_rao_blackwell), k),
        se_indicator: pooled_se(chains.iter().flat_map(|c| c.batch_indicator.iter().cloned())),
        se_rao_blackwell: pooled_se(chains.iter().flat_map(|c| c.batch_rao_blackwell.iter().cloned())),
        visits,
        chains,
    })
}

/// Averaged model-to-model transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEstimate {
    /// Entry `(h, k)`: mean of `Pr(M_k | psi)` over draws from store `h`.
    pub matrix: Vec<Vec<f64>>,
    /// Draws averaged in each row.
    pub counts: Vec<usize>,
    /// Monte Carlo standard error of each entry.
    pub std_errors: Vec<Vec<f64>>,
    /// Row-wise batch estimates: `batches[b][h]` is row `h` from batch `b`.
    #[serde(skip)]
    pub batches: Vec<Vec<Vec<f64>>>,
}

/// Splits `n` draws into at most [`DEFAULT_BATCHES`] nearly equal batches.
fn batch_sizes(n: usize) -> Vec<usize> {
    let b = n.min(DEFAULT_BATCHES);
    (0..b).map(|i| n / b + usize::from(i < n % b)).collect()
}

/// Method 2. Row `h` averages the full conditional over `draws_per_model`
/// independent with-replacement draws from store `h`.
pub fn method2_transition<R: Rng + ?Sized>(
    stores: &[SampleStore],
    bound: &BoundModelSet,
    draws_per_model: usize,
    rng: &mut R,
) -> Result<TransitionEstimate> {
    check_stores(stores, bound)?;
    if draws_per_model == 0 {
        return Err(Error::InvalidArgument("draws_per_model must be at least 1".into()));
    }
    let k = bound.len();
    let row_seeds: Vec<u64> = (0..k).map(|_| rng.random()).collect();
    let sizes = batch_sizes(draws_per_model);
    let jobs: Vec<(usize, usize)> = (0..k).flat_map(|h| (0..sizes.len()).map(move |b| (h, b))).collect();
    // Each (row, batch) job returns per-column sums, combined below in a fixed order.
    let sums = jobs
        .par_iter()
        .map(|&(h, b)| {
            let mut r = stream_rng(row_seeds[h], b as u64);
            let mut acc = vec![CompensatedSum::new(); k];
            let mut probs = vec![0.0; k];
            for _ in 0..sizes[b] {
                let (psi, hyper) = stores[h].draw(&mut r);
                bound.full_conditional(psi, hyper, &mut probs)?;
                for (a, &p) in acc.iter_mut().zip(&probs) {
                    a.add(p);
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut matrix = vec![vec![0.0; k]; k];
    let mut batches = vec![vec![vec![0.0; k]; k]; sizes.len()];
    for (&(h, b), acc) in jobs.iter().zip(&sums) {
        for c in 0..k {
            batches[b][h][c] = acc[c].value() / sizes[b] as f64;
        }
    }
    for h in 0..k {
        for c in 0..k {
            let mut total = CompensatedSum::new();
            for acc in &sums[h * sizes.len()..(h + 1) * sizes.len()] {
                total.add(acc[c].value());
            }
            matrix[h][c] = total.value() / draws_per_model as f64;
        }
    }
    normalize_rows(&mut matrix);
    for bm in &mut batches {
        normalize_rows(bm);
    }
    let std_errors = if sizes.len() >= 2 {
        (0..k)
            .map(|h| {
                let rows: Vec<Vec<f64>> = batches.iter().map(|bm| bm[h].clone()).collect();
                // Unequal batch sizes differ by at most one draw; treated as equal.
                std_error_of_batches(&rows)
            })
            .collect()
    } else {
        vec![vec![f64::NAN; k]; k]
    };
    Ok(TransitionEstimate {
        matrix,
        counts: vec![draws_per_model; k],
        std_errors,
        batches,
    })
}

/// Rescales every row to sum to one.
pub fn normalize_rows(matrix: &mut [Vec<f64>]) {
    for row in matrix {
        let mut s = CompensatedSum::new();
        for &v in row.iter() {
            s.add(v);
        }
        let s = s.value();
        if s > 0.0 {
            for v in row.iter_mut() {
                *v /= s;
            }
        }
    }
}

const ROW_SUM_TOL: f64 = 1e-8;
const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

fn reaches_all(adj: &[Vec<bool>], start: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for (j, &e) in adj[i].iter().enumerate() {
            if e && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Checks that every state reaches every other through positive entries.
pub fn is_irreducible(matrix: &[Vec<f64>]) -> bool {
    let k = matrix.len();
    if k == 0 {
        return false;
    }
    let fwd: Vec<Vec<bool>> = matrix.iter().map(|r| r.iter().map(|&v| v > 0.0).collect()).collect();
    let rev: Vec<Vec<bool>> = (0..k).map(|i| (0..k).map(|j| fwd[j][i]).collect()).collect();
    reaches_all(&fwd, 0) && reaches_all(&rev, 0)
}

/// Stationary distribution of an irreducible row-stochastic matrix, from the
/// linear system `(P' - I) pi = 0` with one equation replaced by `sum pi = 1`.
pub fn stationary_distribution(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = matrix.len();
    if k == 0 {
        return Err(Error::InvalidArgument("empty transition matrix".into()));
    }
    for (h, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(Error::dim(format!("transition matrix row {}", h + 1), k, row.len()));
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "transition matrix row {} has entry {v} outside [0, 1]",
                h + 1
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "transition matrix row {} sums to {s}, not 1",
                h + 1
            )));
        }
    }
    if !is_irreducible(matrix) {
        return Err(Error::NoStationaryDistribution("matrix is reducible".into()));
    }
    let p = DMatrix::from_fn(k, k, |i, j| matrix[i][j]);
    let mut a = p.transpose() - DMatrix::identity(k, k);
    a.row_mut(k - 1).fill(1.0);
    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NoStationaryDistribution("singular system".into()))?;
    let residual = (pi.transpose() * &p - pi.transpose()).amax();
    if !(residual < STATIONARY_RESIDUAL_TOL) || pi.iter().any(|v| *v < -STATIONARY_RESIDUAL_TOL) {
        return Err(Error::NoStationaryDistribution(format!("residual {residual:e}")));
    }
    let mut out: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    Ok(out)
}

/// Method 2 estimate with standard errors from the batch matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method2Result {
    pub draws_per_model: usize,
    pub transition: TransitionEstimate,
    pub stationary: Vec<f64>,
    pub se_stationary: Option<Vec<f64>>,
}

pub fn method2<R: Rng + ?Sized>(
    stores: &[SampleStore],
    bound: &BoundModelSet,
    draws_per_model: usize,
    rng: &mut R,
) -> Result<Method2Result> {
    let transition = method2_transition(stores, bound, draws_per_model, rng)?;
    let stationary = stationary_distribution(&transition.matrix)?;
    let se_stationary = if transition.batches.len() >= 2 {
        transition
            .batches
            .iter()
            .map(|b| stationary_distribution(b))
            .collect::<Result<Vec<_>>>()
            .ok()
            .map(|pis| std_error_of_batches(&pis))
    } else {
        None
    };
    Ok(Method2Result {
        draws_per_model,
        transition,
        stationary,
        se_stationary,
    })
}

fn positive_log(v: &[f64], what: &str) -> Result<Vec<f64>> {
    v.iter()
        .enumerate()
        .map(|(k, &p)| {
            if p.is_nan() || p < 0.0 || p.is_infinite() {
                Err(Error::InvalidArgument(format!("{what}[{}] = {p} is not a probability", k + 1)))
            } else if p == 0.0 {
                Err(Error::NeverVisited(k + 1))
            } else {
                Ok(p.ln())
            }
        })
        .collect()
}

/// `BF[j][k] = (p_j / p_k) / (q_j / q_k)` for posterior `p` and prior `q`.
pub fn bayes_factor_matrix(posterior: &[f64], prior: &[f64]) -> Result<Vec<Vec<f64>>> {
    if posterior.len() != prior.len() {
        return Err(Error::dim("prior probabilities", posterior.len(), prior.len()));
    }
    let lp = positive_log(posterior, "posterior")?;
    let lq = positive_log(prior, "prior")?;
    let lb: Vec<f64> = lp.iter().zip(&lq).map(|(p, q)| p - q).collect();
    Ok(lb
        .iter()
        .map(|bj| lb.iter().map(|bk| (bj - bk).exp()).collect())
        .collect())
}

/// Converts posterior probabilities computed under `old_prior` to those
/// under `new_prior`.
pub fn reweight_under_prior(probs: &[f64], old_prior: &[f64], new_prior: &[f64]) -> Result<Vec<f64>> {
    if probs.len() != old_prior.len() || probs.len() != new_prior.len() {
        return Err(Error::dim("prior probabilities", probs.len(), old_prior.len().max(new_prior.len())));
    }
    let lp = positive_log(probs, "probs")?;
    let lo = positive_log(old_prior, "old prior")?;
    let ln = positive_log(new_prior, "new prior")?;
    let logw: Vec<f64> = (0..probs.len()).map(|k| lp[k] + ln[k] - lo[k]).collect();
    let mut out = vec![0.0; probs.len()];
    normalize_log_weights(&logw, &mut out)?;
    Ok(out)
}

/// Largest change of a log prior weight in one tuning round.
pub const TUNE_LOG_STEP: f64 = 5.0;
/// Allowed gap between visit frequencies and the target.
pub const TUNE_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedPriors {
    /// Weights under which `visit_frequencies` were measured.
    pub weights: Vec<f64>,
    pub target: Vec<f64>,
    pub converged: bool,
    pub rounds: usize,
    pub visit_frequencies: Vec<f64>,
}

/// Adjusts the prior model weights until short Method 1 chains visit models
/// in proportions within [`TUNE_TOLERANCE`] of `target`.
///
/// The update uses the chain's Rao-Blackwellized probabilities; each log step
/// is clamped to `±TUNE_LOG_STEP`.
pub fn tune_model_priors<R: Rng + ?Sized>(
    stores: &[SampleStore],
    bound: &BoundModelSet,
    target: &[f64],
    rounds: usize,
    iters_per_round: usize,
    rng: &mut R,
) -> Result<TunedPriors> {
    let k = bound.len();
    if target.len() != k {
        return Err(Error::dim("tuning target", k, target.len()));
    }
    if rounds == 0 || iters_per_round < 2 {
        return Err(Error::InvalidArgument("tuning needs rounds >= 1 and at least 2 iterations per round".into()));
    }
    let log_target = positive_log(target, "tuning target")?;
    if (target.iter().sum::<f64>() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument("tuning target must sum to 1".into()));
    }
    let mut bound = bound.clone();
    let mut weights = bound.model_set().weights();
    let mut current = 0usize;
    let burnin = iters_per_round / 10;
    for round in 1..=rounds {
        bound.set_weights(&weights)?;
        weights = bound.model_set().weights();
        let run = method1_chain(stores, &bound, iters_per_round, burnin, current, usize::MAX, rng)?;
        current = run.final_model - 1;
        let freq = &run.probs_indicator;
        log::debug!("tuning round {round}: weights {weights:?}, visits {freq:?}");
        if freq.iter().zip(target).all(|(f, t)| (f - t).abs() <= TUNE_TOLERANCE) {
            return Ok(TunedPriors {
                weights,
                target: target.to_vec(),
                converged: true,
                rounds: round,
                visit_frequencies: freq.clone(),
            });
        }
        if round == rounds {
            log::warn!("prior tuning did not reach visit frequencies within {TUNE_TOLERANCE} of the target in {rounds} rounds");
            return Ok(TunedPriors {
                weights,
                target: target.to_vec(),
                converged: false,
                rounds,
                visit_frequencies: freq.clone(),
            });
        }
        let logw: Vec<f64> = (0..k)
            .map(|m| {
                let lp = run.probs_rao_blackwell[m].ln();
                let step = (log_target[m] - lp).clamp(-TUNE_LOG_STEP, TUNE_LOG_STEP);
                weights[m].ln() + step
            })
            .collect();
        normalize_log_weights(&logw, &mut weights)?;
        // Keep every weight representable so the next round can still move it.
        let floor = f64::MIN_POSITIVE.sqrt();
        if weights.iter().any(|&w| w < floor) {
            weights.iter_mut().for_each(|w| *w = w.max(floor));
            let s: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= s);
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "both")]
    Both,
}

impl MethodChoice {
    pub fn method1(self) -> bool {
        matches!(self, MethodChoice::One | MethodChoice::Both)
    }

    pub fn method2(self) -> bool {
        matches!(self, MethodChoice::Two | MethodChoice::Both)
    }
}

impl std::str::FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(MethodChoice::One),
            "2" => Ok(MethodChoice::Two),
            "both" => Ok(MethodChoice::Both),
            other => Err(Error::InvalidArgument(format!("method must be 1, 2 or both, got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage2Settings {
    pub method: MethodChoice,
    /// Method 1 iterations per chain, burn-in included.
    pub iterations: usize,
    pub burnin_fraction: f64,
    /// 1-based starting model of each Method 1 chain; empty means first and last.
    pub initial_models: Vec<usize>,
    pub draws_per_model: usize,
    pub trace_stride: usize,
    pub tune_priors: bool,
    pub tune_rounds: usize,
    pub tune_iterations: usize,
    /// Visit proportions sought by tuning; empty means uniform.
    pub tune_target: Vec<f64>,
}

impl Default for Stage2Settings {
    fn default() -> Self {
        Self {
            method: MethodChoice::Both,
            iterations: 100_000,
            burnin_fraction: 0.5,
            initial_models: Vec::new(),
            draws_per_model: 100_000,
            trace_stride: 1,
            tune_priors: false,
            tune_rounds: 10,
            tune_iterations: 10_000,
            tune_target: Vec::new(),
        }
    }
}

impl Stage2Settings {
    pub fn burnin(&self) -> usize {
        (self.iterations as f64 * self.burnin_fraction).floor() as usize
    }

    /// 0-based initial models for `k` candidate models.
    pub fn initial_models_for(&self, k: usize) -> Result<Vec<usize>> {
        if self.initial_models.is_empty() {
            return Ok(if k == 1 { vec![0] } else { vec![0, k - 1] });
        }
        self.initial_models
            .iter()
            .map(|&m| {
                if (1..=k).contains(&m) {
                    Ok(m - 1)
                } else {
                    Err(Error::InvalidArgument(format!("initial model {m} outside 1..={k}")))
                }
            })
            .collect()
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.burnin_fraction) {
            return Err(Error::InvalidArgument(format!(
                "burnin_fraction {} must lie in [0, 1)",
                self.burnin_fraction
            )));
        }
        if self.method.method1() && self.iterations == 0 {
            return Err(Error::InvalidArgument("method 1 needs iterations >= 1".into()));
        }
        if self.method.method2() && self.draws_per_model == 0 {
            return Err(Error::InvalidArgument("method 2 needs draws_per_model >= 1".into()));
        }
        self.initial_models_for(k)?;
        if !self.tune_target.is_empty() && self.tune_target.len() != k {
            return Err(Error::dim("tune_target", k, self.tune_target.len()));
        }
        Ok(())
    }
}

/// Everything stage 2 produces for one model set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub model_names: Vec<String>,
    /// Prior model weights the chains actually ran under.
    pub prior_weights: Vec<f64>,
    /// Weights requested in the model definitions.
    pub target_prior: Vec<f64>,
    pub seed: Option<u64>,
    pub settings: Stage2Settings,
    pub tuning: Option<TunedPriors>,
    pub method1: Option<Method1Result>,
    pub method2: Option<Method2Result>,
    /// Headline probabilities under `prior_weights`: Rao-Blackwellized when
    /// Method 1 ran, otherwise stationary.
    pub probs: Vec<f64>,
    /// `probs` converted to `target_prior` when tuning changed the weights.
    pub probs_target_prior: Option<Vec<f64>>,
    pub bayes_factors: Option<Vec<Vec<f64>>>,
    pub diagnostics: Vec<String>,
}

impl PosteriorReport {
    /// Probabilities under the requested prior weights.
    pub fn probs_under_target(&self) -> &[f64] {
        self.probs_target_prior.as_deref().unwrap_or(&self.probs)
    }
}

/// Runs stage 2 on prepared stores. All randomness derives from `seed`.
pub fn run_stage2(
    stores: &[SampleStore],
    bound: &BoundModelSet,
    settings: &Stage2Settings,
    seed: u64,
) -> Result<PosteriorReport> {
    let k = bound.len();
    settings.validate(k)?;
    check_stores(stores, bound)?;
    let target_prior = bound.model_set().weights();
    let mut bound = bound.clone();
    let mut diagnostics = Vec::new();

    let tuning = if settings.tune_priors {
        let target = if settings.tune_target.is_empty() {
            vec![1.0 / k as f64; k]
        } else {
            settings.tune_target.clone()
        };
        let mut rng = stream_rng(seed, stream_id(DOMAIN_STAGE2, 0));
        let t = tune_model_priors(stores, &bound, &target, settings.tune_rounds, settings.tune_iterations, &mut rng)?;
        if !t.converged {
            diagnostics.push(format!(
                "prior tuning did not converge in {} rounds; visit frequencies {:?}",
                t.rounds, t.visit_frequencies
            ));
        }
        bound.set_weights(&t.weights)?;
        Some(t)
    } else {
        None
    };
    let prior_weights = bound.model_set().weights();

    let method1 = if settings.method.method1() {
        let mut rng = stream_rng(seed, stream_id(DOMAIN_STAGE2, 1));
        let inits = settings.initial_models_for(k)?;
        let m1 = self::method1(
            stores,
            &bound,
            settings.iterations,
            settings.burnin(),
            &inits,
            settings.trace_stride,
            &mut rng,
        )?;
        for m in m1.never_visited() {
            diagnostics.push(Error::NeverVisited(m).to_string());
        }
        Some(m1)
    } else {
        None
    };
    let method2 = if settings.method.method2() {
        let mut rng = stream_rng(seed, stream_id(DOMAIN_STAGE2, 2));
        let m2 = self::method2(stores, &bound, settings.draws_per_model, &mut rng)?;
        if m2.se_stationary.is_none() && m2.transition.batches.len() >= 2 {
            diagnostics.push("stationary standard errors unavailable: a batch matrix was reducible".into());
        }
        Some(m2)
    } else {
        None
    };
    let probs = match (&method1, &method2) {
        (Some(m1), _) => m1.probs_rao_blackwell.clone(),
        (None, Some(m2)) => m2.stationary.clone(),
        (None, None) => unreachable!(),
    };
    let probs_target_prior = if prior_weights != target_prior {
        match reweight_under_prior(&probs, &prior_weights, &target_prior) {
            Ok(p) => Some(p),
            Err(e) => {
                diagnostics.push(format!("cannot reweight to the requested priors: {e}"));
                None
            }
        }
    } else {
        None
    };
    let bayes_factors = match bayes_factor_matrix(&probs, &prior_weights) {
        Ok(bf) => Some(bf),
        Err(e) => {
            diagnostics.push(format!("Bayes factors unavailable: {e}"));
            None
        }
    };
    Ok(PosteriorReport {
        model_names: bound.model_set().names(),
        prior_weights,
        target_prior,
        seed: Some(seed),
        settings: settings.clone(),
        tuning,
        method1,
        method2,
        probs,
        probs_target_prior,
        bayes_factors,
        diagnostics,
    })
}
