use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};

/// One draw from `Be(successes + alpha, trials - successes + beta)`.
pub fn sample_beta_posterior<R: Rng + ?Sized>(
    successes: u64,
    trials: u64,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Result<f64> {
    if successes > trials {
        return Err(Error::InvalidArgument(format!(
            "successes ({successes}) exceed trials ({trials})"
        )));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta prior ({alpha}, {beta}) must be positive")));
    }
    let a = successes as f64 + alpha;
    let b = (trials - successes) as f64 + beta;
    let dist = Beta::new(a, b).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sample(rng))
}
