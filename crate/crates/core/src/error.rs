use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::Pattern;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input is missing required column `{0}`")]
    MissingColumn(String),

    #[error("malformed row at line {0}")]
    MalformedRow(u64),

    #[error("no annotation for pattern {0} from one of the reviewers")]
    MissingAnnotation(Pattern),

    #[error("train fraction must lie strictly between 0 and 1 (got {0})")]
    InvalidFraction(String),

    #[error("text provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("need at least {needed} distinct points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no training data")]
    EmptyData,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("model has not been fitted")]
    UnfittedModel,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("empty input")]
    EmptyInput,

    #[error("model provenance does not match the evaluation split: {0}")]
    SplitMismatch(String),

    #[error("refusing to overwrite existing output {0} (pass --force)")]
    Overwrite(PathBuf),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported format version {found} in {what} (expected {expected})")]
    FormatVersion {
        what: String,
        found: u32,
        expected: u32,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingColumn(_) => 2,
            Error::TooFewPoints { .. } => 3,
            Error::SplitMismatch(_) => 4,
            Error::Overwrite(_) => 5,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
