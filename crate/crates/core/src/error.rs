use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no token reaches min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("shift k must be >= 1, got {0}")]
    InvalidK(f64),

    #[error("pair ({w}, {c}) has a zero marginal")]
    DegenerateMarginal { w: usize, c: usize },

    #[error("{0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains undefined (negative infinity) entries")]
    MarkerContamination,

    #[error("objective increased from {before} to {after} at half-sweep {half_sweep}")]
    Divergence { before: f64, after: f64, half_sweep: usize },

    #[error("non-finite loss at iteration {iteration} (step size {step}): {detail}")]
    NonFinite {
        iteration: usize,
        step: f64,
        detail: String,
    },

    #[error("unknown word `{0}`")]
    UnknownWord(String),

    #[error("need at least 2 scorable pairs, found {0}")]
    InsufficientPairs(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inputs come from different sources: {0}")]
    ProvenanceMismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Stable kebab-case category printed by the command-line front-end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptyVocabulary { .. } => "empty-vocabulary",
            Error::InvalidWindow(_) => "invalid-window",
            Error::InvalidK(_) => "invalid-k",
            Error::DegenerateMarginal { .. } => "degenerate-marginal",
            Error::Domain(_) => "domain",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::MarkerContamination => "marker-contamination",
            Error::Divergence { .. } => "divergence",
            Error::NonFinite { .. } => "non-finite",
            Error::UnknownWord(_) => "unknown-word",
            Error::InsufficientPairs(_) => "insufficient-pairs",
            Error::InvalidConfig(_) => "invalid-config",
            Error::ProvenanceMismatch(_) => "provenance-mismatch",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
