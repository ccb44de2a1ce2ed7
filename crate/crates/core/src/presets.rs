//! Ready-made model families: two-group binomial, two-covariate normal
//! regression (radiata pine) and the five-model hierarchical logistic family
//! (trout return rates).

use std::path::{Path, PathBuf};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::io::config::{RunConfig, RunOutput};
use crate::io::report::{emit_report, ReportFormat};
use crate::io::tables::load_dataset_csv;
use crate::likelihood::Likelihood;
use crate::palette::{LinearBijection, ModelSet, ModelSpec};
use crate::postprocess::{MethodChoice, Stage2Settings};
use crate::prior::{Prior, ProductPrior};
use crate::samplers::Stage1Settings;

/// Column schema of the pine data file.
pub const PINE_COLUMNS: [&str; 3] = ["y", "x", "z"];
/// Column schema of the trout data file.
pub const TROUT_COLUMNS: [&str; 3] = ["y", "S", "L"];

/// Shape and rate of the Gamma prior on the shared precision `V`.
pub const TROUT_V_SHAPE: f64 = 3.29;
pub const TROUT_V_RATE: f64 = 7.80;

/// Successes `(8, 16)` out of `(20, 30)` trials.
pub fn binomial_data() -> Dataset {
    Dataset::from_columns([("y", vec![8.0, 16.0]), ("n", vec![20.0, 30.0])]).expect("static data")
}

/// Separate probabilities (model 1) against one pooled probability (model
/// 2). Both use `Be(alpha, beta)` parameter priors; model 2 maps the palette
/// through `pi = (psi_1 + psi_2) / 2`, `u = psi_2` with `u ~ Be(supp, supp)`.
pub fn binomial_models(alpha: f64, beta: f64, supp: f64, weight_pooled: f64) -> Result<(ModelSet, Dataset)> {
    let p = Prior::Beta { alpha, beta };
    let separate = ModelSpec {
        name: "separate".into(),
        weight: 1.0 - weight_pooled,
        bijection: None,
        prior: ProductPrior::iid(p.clone(), 2)?,
        supplemental: ProductPrior::empty(),
        hyper_prior: None,
        likelihood: Likelihood::Binomial {
            successes: "y".into(),
            trials: "n".into(),
            groups: vec![0, 1],
        },
    };
    let pooled = ModelSpec {
        name: "pooled".into(),
        weight: weight_pooled,
        bijection: Some(LinearBijection::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]])?),
        prior: ProductPrior::new(vec![p])?,
        supplemental: ProductPrior::new(vec![Prior::Beta { alpha: supp, beta: supp }])?,
        hyper_prior: None,
        likelihood: Likelihood::Binomial {
            successes: "y".into(),
            trials: "n".into(),
            groups: vec![0, 0],
        },
    };
    Ok((ModelSet::new(vec![separate, pooled])?, binomial_data()))
}

/// Strength regressed on density (`x`, model 1) or resin-adjusted density
/// (`z`, model 2), covariates centered. Priors `N((3000, 185), diag(1e6,
/// 1e4))` on the coefficients and inverse gamma with mean and sd `300^2`
/// (shape 3, scale 180000) on the variance.
pub fn pine_models(weight_z: f64) -> Result<ModelSet> {
    let prior = ProductPrior::new(vec![
        Prior::MvNormal {
            mean: vec![3000.0, 185.0],
            cov: vec![vec![1e6, 0.0], vec![0.0, 1e4]],
        },
        Prior::InverseGamma {
            shape: 3.0,
            scale: 180_000.0,
        },
    ])?;
    let model = |name: &str, cov: &str, weight: f64| ModelSpec {
        name: name.into(),
        weight,
        bijection: None,
        prior: prior.clone(),
        supplemental: ProductPrior::empty(),
        hyper_prior: None,
        likelihood: Likelihood::NormalLinear {
            response: "y".into(),
            covariates: vec![cov.into()],
            center: true,
        },
    };
    ModelSet::new(vec![model("density", "x", 1.0 - weight_z), model("adjusted", "z", weight_z)])
}

/// Logistic terms and palette layout for the five trout models.
///
/// Palette slots are `(b0, b_S, b_L, b_SL)`; a model that lacks a
/// coefficient uses that slot for a supplemental variable.
pub fn trout_models(weight: f64) -> Result<ModelSet> {
    let s = || vec!["S".to_string()];
    let l = || vec!["L".to_string()];
    let layouts: [(&str, Vec<Vec<String>>, [usize; 4]); 5] = [
        ("constant", vec![], [0, 1, 2, 3]),
        ("sex", vec![s()], [0, 1, 2, 3]),
        ("length", vec![l()], [0, 2, 1, 3]),
        ("sex+length", vec![s(), l()], [0, 1, 2, 3]),
        ("sex*length", vec![s(), l(), vec!["S".into(), "L".into()]], [0, 1, 2, 3]),
    ];
    let models = layouts
        .into_iter()
        .map(|(name, terms, order)| {
            let n_k = terms.len() + 1;
            let coef = Prior::HierNormal {
                precision_mult: n_k as f64,
            };
            Ok(ModelSpec {
                name: name.into(),
                weight,
                bijection: if order == [0, 1, 2, 3] {
                    None
                } else {
                    Some(LinearBijection::permutation(&order)?)
                },
                prior: ProductPrior::iid(coef.clone(), n_k)?,
                supplemental: ProductPrior::iid(coef, 4 - n_k)?,
                hyper_prior: Some(Prior::Gamma {
                    shape: TROUT_V_SHAPE,
                    rate: TROUT_V_RATE,
                }),
                likelihood: Likelihood::Logistic {
                    response: "y".into(),
                    terms,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (set, _) = ModelSet::normalized(models)?;
    Ok(set)
}

/// The built-in examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    Binomial,
    Pine,
    Trout,
}

impl Example {
    pub const NAMES: [&'static str; 3] = ["binomial", "pine", "trout"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "binomial" => Ok(Example::Binomial),
            "pine" => Ok(Example::Pine),
            "trout" => Ok(Example::Trout),
            other => Err(Error::Config(format!(
                "unknown example '{other}'; choose one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }

    /// Required data columns; empty for the embedded binomial data.
    pub fn schema(self) -> &'static [&'static str] {
        match self {
            Example::Binomial => &[],
            Example::Pine => &PINE_COLUMNS,
            Example::Trout => &TROUT_COLUMNS,
        }
    }

    /// Default model set and prior weights.
    pub fn models(self) -> Result<ModelSet> {
        match self {
            Example::Binomial => binomial_models(1.0, 1.0, 15.0, 0.5).map(|(m, _)| m),
            Example::Pine => pine_models(0.0005),
            Example::Trout => trout_models(0.2),
        }
    }

    /// The example's dataset: embedded for the binomial example, otherwise
    /// read from `path`. Trout covariates are standardized.
    pub fn dataset(self, path: Option<&Path>) -> Result<Dataset> {
        if self == Example::Binomial {
            return Ok(match path {
                Some(p) => load_dataset_csv(p, &["y", "n"])?,
                None => binomial_data(),
            });
        }
        let path = path.ok_or_else(|| Error::MissingData {
            example: self.name().into(),
            columns: self.schema().join(", "),
        })?;
        let mut data = load_dataset_csv(path, self.schema())?;
        if self == Example::Trout {
            data.standardize("S")?;
            data.standardize("L")?;
        }
        Ok(data)
    }

    /// Full configuration with this example's default run lengths.
    pub fn config(self) -> RunConfig {
        let stage2 = match self {
            Example::Binomial => Stage2Settings::default(),
            Example::Pine => Stage2Settings {
                iterations: 200_000,
                draws_per_model: 200_000,
                ..Default::default()
            },
            Example::Trout => Stage2Settings {
                tune_priors: true,
                ..Default::default()
            },
        };
        RunConfig {
            example: Some(self.name().into()),
            stage1: Stage1Settings::default(),
            stage2,
            ..Default::default()
        }
    }
}

/// Settings that may replace an example's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleOverrides {
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<ReportFormat>,
    pub method: Option<MethodChoice>,
    pub iterations: Option<usize>,
    pub burnin_fraction: Option<f64>,
    pub draws_per_model: Option<usize>,
    pub stage1_iterations: Option<usize>,
    pub stage1_burnin: Option<usize>,
    pub tune_priors: Option<bool>,
}

impl ExampleOverrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(o) = &self.output {
            cfg.output = Some(o.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(m) = self.method {
            cfg.stage2.method = m;
        }
        if let Some(j) = self.iterations {
            cfg.stage2.iterations = j;
        }
        if let Some(b) = self.burnin_fraction {
            cfg.stage2.burnin_fraction = b;
        }
        if let Some(n) = self.draws_per_model {
            cfg.stage2.draws_per_model = n;
        }
        if let Some(n) = self.stage1_iterations {
            cfg.stage1.iterations = n;
        }
        if let Some(n) = self.stage1_burnin {
            cfg.stage1.burnin = n;
        }
        if let Some(t) = self.tune_priors {
            cfg.stage2.tune_priors = t;
        }
    }
}

/// Runs a built-in example end to end, writing the report and traces when
/// an output directory is set.
pub fn run_example(name: &str, overrides: &ExampleOverrides) -> Result<RunOutput> {
    let mut cfg = Example::from_name(name)?.config();
    overrides.apply(&mut cfg);
    let out = cfg.prepare()?.run()?;
    if let Some(dir) = &cfg.output {
        emit_report(&out.report, dir, cfg.format)?;
    }
    Ok(out)
}
