use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numeric,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid record: {0}")]
    Record(String),

    #[error("line {line}, column {column} ({attribute}): {message}")]
    Csv {
        line: usize,
        column: usize,
        attribute: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("matrix is not positive definite: leading minor of order {order} has non-positive pivot {pivot:e}")]
    NotPositiveDefinite { order: usize, pivot: f64 },

    #[error("training diverged at epoch {epoch} (non-finite loss); try a smaller learning rate")]
    Divergence { epoch: usize },

    #[error("fitness is not finite ({value}) at chromosome {chromosome}")]
    NonFiniteFitness { chromosome: String, value: f64 },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("provenance check failed: {0}")]
    Provenance(String),

    #[error("missing artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::Divergence { .. }
            | Error::NonFiniteFitness { .. }
            | Error::Undefined(_)
            | Error::Singular(_)
            | Error::Domain(_) => ErrorKind::Numeric,
            Error::Io(_) | Error::MissingArtifacts(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}
