use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: dates are not strictly increasing at line {line}")]
    NonMonotoneDates { path: PathBuf, line: u64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("temperature series does not cover year {year}")]
    TemperatureCoverage { year: i32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing prior for active parameter {0}")]
    MissingPrior(String),

    #[error("start point is outside the posterior support")]
    StartOutsideSupport,

    #[error("objective is -inf on the entire initial population")]
    InfeasibleObjective,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bridge sampling did not converge within {0} iterations")]
    BridgeNotConverged(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("refusing to overwrite existing outputs in {0} (use --force)")]
    OutputExists(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
