use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the assessment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid window kind: expected {expected}, found {found}")]
    InvalidKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Q-statistic threshold undefined: {0}")]
    ThresholdUndefined(String),

    #[error("entropy undefined: {0}")]
    EntropyUndefined(String),

    #[error("clusters overlap at sample {0}")]
    ClusterOverlap(usize),

    #[error("unknown attack suite {0}")]
    UnknownSignature(u32),

    #[error("unknown path `{0}`")]
    UnknownPath(String),

    #[error("no edge {0} -> {1}")]
    UnknownEdge(String, String),

    #[error("missing artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InvalidKind { .. } => "invalid-kind",
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::InsufficientSamples { .. } => "insufficient-samples",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::ThresholdUndefined(_) => "threshold-undefined",
            Error::EntropyUndefined(_) => "entropy-undefined",
            Error::ClusterOverlap(_) => "cluster-overlap",
            Error::UnknownSignature(_) => "unknown-signature",
            Error::UnknownPath(_) => "unknown-path",
            Error::UnknownEdge(..) => "unknown-edge",
            Error::MissingArtifacts(_) => "missing-artifacts",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
