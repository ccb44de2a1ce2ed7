//! Run configuration (TOML) and end-to-end orchestration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::io::report::ReportFormat;
use crate::io::tables::{load_chain_csv, load_dataset_csv, load_store_csv};
use crate::palette::{ModelSet, ModelSpec};
use crate::postprocess::{run_stage2, PosteriorReport, Stage2Settings};
use crate::presets;
use crate::samplers::{fit_model, store_from_chain, SampleStore, Stage1Settings};

fn default_seed() -> u64 {
    1
}

/// A model definition plus an optional precomputed source of draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(flatten)]
    pub spec: ModelSpec,
    /// Parameter chain CSV used instead of the built-in sampler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<PathBuf>,
    /// Palette store CSV; skips stage 1 for this model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
}

impl From<ModelSpec> for ModelEntry {
    fn from(spec: ModelSpec) -> Self {
        Self {
            spec,
            chain: None,
            store: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Built-in example whose data handling (and, when `models` is empty,
    /// model set) is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Directory receiving the report and traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default)]
    pub stage1: Stage1Settings,
    #[serde(default)]
    pub stage2: Stage2Settings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelEntry>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            example: None,
            data: None,
            output: None,
            format: ReportFormat::default(),
            stage1: Stage1Settings::default(),
            stage2: Stage2Settings::default(),
            models: Vec::new(),
        }
    }
}

/// Where a model's palette store comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum StoreSource {
    Fit,
    Chain(PathBuf),
    Store(PathBuf),
}

/// A validated configuration with its data loaded.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub config: RunConfig,
    pub models: ModelSet,
    pub data: Dataset,
    pub sources: Vec<StoreSource>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: PosteriorReport,
    pub stores: Vec<SampleStore>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.data.iter_mut().for_each(fix);
        cfg.output.iter_mut().for_each(fix);
        for m in &mut cfg.models {
            m.chain.iter_mut().for_each(fix);
            m.store.iter_mut().for_each(fix);
        }
        Ok(cfg)
    }

    /// Checks every invariant and loads the data. Nothing is sampled.
    pub fn prepare(&self) -> Result<PreparedRun> {
        let example = self.example.as_deref().map(presets::Example::from_name).transpose()?;
        let entries: Vec<ModelEntry> = if self.models.is_empty() {
            let ex = example.ok_or_else(|| Error::Config("no models defined and no example named".into()))?;
            ex.models()?.models().iter().cloned().map(ModelEntry::from).collect()
        } else {
            self.models.clone()
        };
        for m in &entries {
            for p in m.chain.iter().chain(&m.store) {
                if !p.is_file() {
                    return Err(Error::Config(format!("model '{}': file {} does not exist", m.spec.name, p.display())));
                }
            }
            if m.chain.is_some() && m.store.is_some() {
                return Err(Error::Config(format!("model '{}': give either chain or store, not both", m.spec.name)));
            }
        }
        let (models, rescaled) = ModelSet::normalized(entries.iter().map(|m| m.spec.clone()).collect())?;
        if rescaled {
            log::warn!("prior model weights did not sum to 1; renormalized to {:?}", models.weights());
        }
        if let Some(p) = &self.data {
            if !p.is_file() {
                return Err(Error::Config(format!("data file {} does not exist", p.display())));
            }
        }
        let data = match (example, &self.data) {
            (Some(ex), data) => ex.dataset(data.as_deref())?,
            (None, Some(p)) => load_dataset_csv(p, &[])?,
            (None, None) => Dataset::empty(),
        };
        // Binding resolves every likelihood column against the data.
        models.bind(&data)?;
        let sources: Vec<StoreSource> = entries
            .iter()
            .map(|m| match (&m.chain, &m.store) {
                (Some(c), _) => StoreSource::Chain(c.clone()),
                (_, Some(s)) => StoreSource::Store(s.clone()),
                _ => StoreSource::Fit,
            })
            .collect();
        if sources.contains(&StoreSource::Fit) {
            self.stage1.validate()?;
        }
        self.stage2.validate(models.len())?;
        Ok(PreparedRun {
            config: self.clone(),
            models,
            data,
            sources,
        })
    }
}

impl PreparedRun {
    /// Palette stores for every model, from files or the built-in samplers.
    pub fn stage1(&self) -> Result<Vec<SampleStore>> {
        let seed = self.config.seed;
        let s1 = &self.config.stage1;
        self.models
            .models()
            .iter()
            .zip(&self.sources)
            .enumerate()
            .map(|(k, (m, src))| match src {
                StoreSource::Store(p) => load_store_csv(p, k, self.models.dim()),
                StoreSource::Chain(p) => {
                    let chain = load_chain_csv(p, m.n_params())?;
                    store_from_chain(m, k, &chain, seed)
                }
                StoreSource::Fit => {
                    log::info!("stage 1: fitting model '{}'", m.name);
                    let chain = fit_model(m, k, &self.data, s1, seed)?;
                    let mut store = store_from_chain(m, k, &chain, seed)?;
                    store.meta.burnin = s1.burnin;
                    store.meta.chains = s1.chains;
                    store.meta.draws = store.len();
                    Ok(store)
                }
            })
            .collect()
    }

    pub fn stage2(&self, stores: &[SampleStore]) -> Result<PosteriorReport> {
        let bound = self.models.bind(&self.data)?;
        run_stage2(stores, &bound, &self.config.stage2, self.config.seed)
    }

    pub fn run(&self) -> Result<RunOutput> {
        let stores = self.stage1()?;
        let report = self.stage2(&stores)?;
        Ok(RunOutput { report, stores })
    }
}
