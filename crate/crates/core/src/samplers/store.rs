use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::palette::{invert_bijection, ModelSpec};

/// A chain of model parameters, optionally paired with a shared
/// hyperparameter per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaChain {
    pub names: Vec<String>,
    pub draws: Vec<Vec<f64>>,
    pub hyper: Option<Vec<f64>>,
}

impl ThetaChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub draws: usize,
    pub burnin: usize,
    pub chains: usize,
    pub seed: Option<u64>,
}

/// Stored palette draws from one model's posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStore {
    model: usize,
    dim: usize,
    psi: Vec<f64>,
    hyper: Option<Vec<f64>>,
    pub meta: StoreMeta,
}

impl SampleStore {
    /// `psi` is row-major with `dim` columns.
    pub fn new(model: usize, dim: usize, psi: Vec<f64>, hyper: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("sample store with zero palette dimension".into()));
        }
        if psi.is_empty() {
            return Err(Error::EmptyStore(model + 1));
        }
        if psi.len() % dim != 0 {
            return Err(Error::dim("sample store values (multiple of palette dim)", dim, psi.len() % dim));
        }
        let rows = psi.len() / dim;
        if let Some(i) = psi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample store row {}", i / dim + 1)));
        }
        if let Some(h) = &hyper {
            if h.len() != rows {
                return Err(Error::dim("hyperparameter column", rows, h.len()));
            }
            if let Some(i) = h.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("hyperparameter row {}", i + 1)));
            }
        }
        Ok(Self {
            model,
            dim,
            psi,
            hyper,
            meta: StoreMeta {
                draws: rows,
                ..Default::default()
            },
        })
    }

    pub fn from_rows(model: usize, rows: &[Vec<f64>], hyper: Option<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::dim("palette row", dim, r.len()));
        }
        Self::new(model, dim, rows.concat(), hyper)
    }

    pub fn model(&self) -> usize {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.psi.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.psi[i * self.dim..(i + 1) * self.dim]
    }

    pub fn hyper(&self, i: usize) -> Option<f64> {
        self.hyper.as_ref().map(|h| h[i])
    }

    pub fn has_hyper(&self) -> bool {
        self.hyper.is_some()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.psi.chunks_exact(self.dim)
    }

    /// Uniform draw with replacement: `(psi, hyper)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (&[f64], Option<f64>) {
        let i = rng.random_range(0..self.len());
        (self.row(i), self.hyper(i))
    }
}

/// One draw of the supplemental coordinates `u ~ [u | M_k]`.
pub fn sample_supplemental<R: Rng + ?Sized>(model: &ModelSpec, hyper: Option<f64>, rng: &mut R) -> Result<Vec<f64>> {
    model.supplemental.sample(hyper, rng)
}

/// Maps every parameter draw to a palette draw, pairing each with a fresh
/// supplemental draw.
pub fn build_psi_store<R: Rng + ?Sized>(
    model: &ModelSpec,
    model_index: usize,
    chain: &ThetaChain,
    rng: &mut R,
) -> Result<SampleStore> {
    if chain.is_empty() {
        return Err(Error::EmptyStore(model_index + 1));
    }
    if let Some(h) = &chain.hyper {
        if h.len() != chain.len() {
            return Err(Error::dim("hyperparameter chain", chain.len(), h.len()));
        }
    }
    let d = model.palette_dim();
    let mut psi = Vec::with_capacity(chain.len() * d);
    for (i, theta) in chain.draws.iter().enumerate() {
        let hyper = chain.hyper.as_ref().map(|h| h[i]);
        let u = sample_supplemental(model, hyper, rng)?;
        psi.extend(invert_bijection(model, theta, &u)?.iter());
    }
    SampleStore::new(model_index, d, psi, chain.hyper.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palette::apply_bijection;
    use crate::presets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pooled_model_rows_follow_the_halving_map() {
        let (models, _) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let m2 = models.get(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pis: Vec<Vec<f64>> = (0..500).map(|i| vec![0.3 + 0.0004 * i as f64]).collect();
        let chain = ThetaChain {
            names: vec!["pi".into()],
            draws: pis.clone(),
            hyper: None,
        };
        let store = build_psi_store(m2, 1, &chain, &mut rng).unwrap();
        assert_eq!(store.len(), 500);
        for (row, pi) in store.rows().zip(&pis) {
            let u = row[1];
            assert!((row[0] - (2.0 * pi[0] - u)).abs() < 1e-14);
            let (theta, back_u) = apply_bijection(m2, row).unwrap();
            assert!((theta[0] - pi[0]).abs() < 1e-14);
            assert_eq!(back_u[0], u);
        }
    }

    #[test]
    fn identity_rows_equal_theta() {
        let (models, _) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let chain = ThetaChain {
            names: vec!["p1".into(), "p2".into()],
            draws: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            hyper: None,
        };
        let store = build_psi_store(models.get(0), 0, &chain, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(store.row(0), &[0.1, 0.2]);
        assert_eq!(store.row(1), &[0.3, 0.4]);
    }

    #[test]
    fn supplemental_draws() {
        let (models, _) = presets::binomial_models(1.0, 1.0, 15.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        assert!(sample_supplemental(models.get(0), None, &mut rng).unwrap().is_empty());
        let n = 100_000;
        let m = (0..n)
            .map(|_| sample_supplemental(models.get(1), None, &mut rng).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        assert!((m - 0.5).abs() < 0.005);

        let trout = presets::trout_models(0.2).unwrap();
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| sample_supplemental(trout.get(0), Some(1.0), &mut rng).unwrap())
            .collect();
        assert_eq!(draws[0].len(), 3);
        for k in 0..3 {
            let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            assert!((sd - 1.0).abs() < 0.02, "{sd}");
        }
    }

    #[test]
    fn store_validation() {
        assert!(matches!(SampleStore::new(2, 2, vec![], None), Err(Error::EmptyStore(3))));
        assert!(SampleStore::new(0, 2, vec![1.0, f64::NAN], None).is_err());
        assert!(SampleStore::new(0, 2, vec![1.0, 2.0], Some(vec![1.0, 2.0])).is_err());
        assert!(SampleStore::new(0, 2, vec![1.0, 2.0, 3.0], None).is_err());
    }
}
