//! Log-domain arithmetic, compensated sums and batch-means bookkeeping.

use rand::Rng;

use crate::error::{Error, Result};

/// `log(sum(exp(v)))`, shifted by the maximum so large negative inputs do not
/// underflow. `-inf` entries contribute nothing.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v.is_nan() {
            return Err(Error::NonFinite("NaN passed to log_sum_exp".into()));
        }
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::NoMass);
    }
    if max == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if values.len() == 1 {
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Normalizes log weights into a probability vector, in place.
pub fn normalize_log_weights(log_weights: &[f64], out: &mut [f64]) -> Result<()> {
    debug_assert_eq!(log_weights.len(), out.len());
    let norm = log_sum_exp(log_weights)?;
    for (o, &lw) in out.iter_mut().zip(log_weights) {
        *o = (lw - norm).exp();
    }
    Ok(())
}

/// Draws an index from a probability vector that sums to one.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the final cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Number of batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 20;

/// Streaming vector-valued batch means over a series of known length.
///
/// The first `len % batches` observations are dropped from the batch
/// statistics (they still count toward the overall mean), so every batch has
/// the same size.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    dim: usize,
    batches: usize,
    batch_len: usize,
    skip: usize,
    seen: usize,
    total: Vec<CompensatedSum>,
    batch_sums: Vec<Vec<f64>>,
}

impl BatchMeans {
    pub fn new(dim: usize, len: usize, batches: usize) -> Self {
        let batch_len = len / batches.max(1);
        let skip = if batch_len == 0 { len } else { len - batch_len * batches };
        Self {
            dim,
            batches,
            batch_len,
            skip,
            seen: 0,
            total: vec![CompensatedSum::new(); dim],
            batch_sums: vec![vec![0.0; dim]; if batch_len == 0 { 0 } else { batches }],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (t, &v) in self.total.iter_mut().zip(x) {
            t.add(v);
        }
        if self.seen >= self.skip && self.batch_len > 0 {
            let b = (self.seen - self.skip) / self.batch_len;
            for (s, &v) in self.batch_sums[b].iter_mut().zip(x) {
                *s += v;
            }
        }
        self.seen += 1;
    }

    pub fn count(&self) -> usize {
        self.seen
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.seen.max(1) as f64;
        self.total.iter().map(|t| t.value() / n).collect()
    }

    /// Per-batch means; empty when the series was shorter than the batch count.
    pub fn batch_means(&self) -> Vec<Vec<f64>> {
        let len = self.batch_len as f64;
        self.batch_sums
            .iter()
            .map(|b| b.iter().map(|s| s / len).collect())
            .collect()
    }

    /// Batch-means standard error of each coordinate of the mean, `None` when
    /// there are too few observations to form the batches.
    pub fn std_error(&self) -> Option<Vec<f64>> {
        if self.batch_len == 0 || self.batches < 2 {
            return None;
        }
        Some(std_error_of_batches(&self.batch_means()))
    }
}

/// Standard error of the grand mean from equally sized batch means.
pub fn std_error_of_batches(batch_means: &[Vec<f64>]) -> Vec<f64> {
    let b = batch_means.len();
    if b < 2 {
        return vec![f64::NAN; batch_means.first().map_or(0, Vec::len)];
    }
    let dim = batch_means[0].len();
    (0..dim)
        .map(|k| {
            let mean = batch_means.iter().map(|m| m[k]).sum::<f64>() / b as f64;
            let var = batch_means.iter().map(|m| (m[k] - mean).powi(2)).sum::<f64>()
                / (b as f64 - 1.0);
            (var / b as f64).sqrt()
        })
        .collect()
}
