use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use palette_rjmcmc::io::{self, load_store_csv, write_store_csv, ReportFormat, RunConfig};
use palette_rjmcmc::postprocess::MethodChoice;
use palette_rjmcmc::presets::{self, ExampleOverrides};
use palette_rjmcmc::{Error, ErrorKind, PosteriorReport, Result};

/// Posterior model probabilities and Bayes factors from per-model MCMC output.
#[derive(Parser)]
#[command(name = "palette-rj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample every model's posterior and write one palette store per model.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Directory for store_model_<k>.csv files.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute posterior model probabilities from palette stores.
    Weigh {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding store_model_<k>.csv from `fit`; models are
        /// sampled afresh when omitted.
        #[arg(long)]
        stores: Option<PathBuf>,
        #[command(flatten)]
        stage2: Stage2Flags,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Run a built-in example: binomial, pine or trout.
    Example {
        name: String,
        /// Data CSV (required for pine and trout).
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        stage2: Stage2Flags,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Render a saved report.json.
    Report {
        json: PathBuf,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Write the full set of report files here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Stage2Flags {
    /// 1, 2 or both.
    #[arg(long)]
    method: Option<MethodChoice>,
    /// Method 1 iterations per chain.
    #[arg(long)]
    iters: Option<usize>,
    /// Fraction of each Method 1 chain discarded as burn-in.
    #[arg(long)]
    burnin: Option<f64>,
    /// Method 2 draws per model.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tune prior model weights for balanced visits, then reweight.
    #[arg(long)]
    tune_priors: bool,
}

impl Stage2Flags {
    fn overrides(&self) -> ExampleOverrides {
        ExampleOverrides {
            seed: self.seed,
            method: self.method,
            iterations: self.iters,
            burnin_fraction: self.burnin,
            draws_per_model: self.draws,
            tune_priors: self.tune_priors.then_some(true),
            ..Default::default()
        }
    }
}

fn store_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("store_model_{}.csv", k + 1))
}

fn deliver(report: &PosteriorReport, out: Option<&Path>, format: ReportFormat) -> Result<()> {
    match out {
        Some(dir) => {
            for f in io::emit_report(report, dir, format)? {
                println!("wrote {}", f.display());
            }
        }
        None => match format {
            ReportFormat::Text => print!("{}", io::render_text(report)?),
            ReportFormat::Csv => print!("{}", io::render_probabilities_csv(report)?),
        },
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { config, out, seed } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let run = cfg.prepare()?;
            let dir = out.or(cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            for (k, store) in run.stage1()?.iter().enumerate() {
                let path = store_path(&dir, k);
                write_store_csv(&path, store)?;
                println!("{}: {} draws -> {}", run.models.get(k).name, store.len(), path.display());
            }
            Ok(())
        }
        Command::Weigh {
            config,
            stores,
            stage2,
            out,
            format,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            stage2.overrides().apply(&mut cfg);
            let run = cfg.prepare()?;
            let stores = match &stores {
                Some(dir) => (0..run.models.len())
                    .map(|k| load_store_csv(&store_path(dir, k), k, run.models.dim()))
                    .collect::<Result<Vec<_>>>()?,
                None => run.stage1()?,
            };
            let report = run.stage2(&stores)?;
            deliver(&report, out.as_deref().or(cfg.output.as_deref()), format.unwrap_or(cfg.format))
        }
        Command::Example {
            name,
            data,
            stage2,
            out,
            format,
        } => {
            let mut overrides = stage2.overrides();
            overrides.data = data;
            overrides.format = format;
            let output = presets::run_example(&name, &overrides)?;
            deliver(&output.report, out.as_deref(), format.unwrap_or_default())
        }
        Command::Report { json, format, out } => {
            let report = io::load_report_json(&json)?;
            deliver(&report, out.as_deref(), format)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Validation => 1,
        ErrorKind::Numerical => 2,
        ErrorKind::Io => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
