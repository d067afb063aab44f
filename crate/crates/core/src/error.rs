use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum DlabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("symbol is not finite at lattice frequency {xi:?}")]
    NonFiniteSymbol { xi: [f64; 3] },
    #[error("dimension {n} not supported here: {reason}")]
    Dimension { n: usize, reason: String },
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid time samples: {0}")]
    InvalidTimes(String),
    #[error("invalid support: {0}")]
    InvalidSupport(String),
    #[error("unresolvable parameter: {0}")]
    Unresolvable(String),
    #[error("fit rejected: {0}")]
    Fit(String),
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("container format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = DlabError> = std::result::Result<T, E>;
