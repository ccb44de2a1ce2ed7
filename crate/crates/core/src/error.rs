use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("log_sum_exp of an empty or all -inf vector")]
    NoMass,

    #[error("degenerate palette point: every model has zero density at psi = {psi:?}")]
    DegeneratePalette { psi: Vec<f64> },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("no unique stationary distribution: {0}")]
    NoStationaryDistribution(String),

    #[error("model_{0} never visited; increase iterations or tune priors")]
    NeverVisited(usize),

    #[error("no post-burn-in iterations")]
    NoPostBurnin,

    #[error("empty sample store for model_{0}")]
    EmptyStore(usize),

    #[error("{source_name}: missing column '{column}'")]
    MissingColumn { source_name: String, column: String },

    #[error("{source_name}: line {line}, column '{column}': {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: String,
        message: String,
    },

    #[error("{0}: no records")]
    NoRecords(String),

    #[error("config: {0}")]
    Config(String),

    #[error("example '{example}' needs a data file; expected CSV with header columns {columns}")]
    MissingData { example: String, columns: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Singular(_)
            | Error::NoMass
            | Error::DegeneratePalette { .. }
            | Error::NonFinite(_)
            | Error::NoStationaryDistribution(_)
            | Error::NeverVisited(_)
            | Error::NoPostBurnin => ErrorKind::Numerical,
            Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            actual,
        }
    }
}
