use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error category, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Model,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column `{0}`")]
    Schema(String),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("track point {index} lies outside the hindcast grid: {detail}")]
    OutOfBounds { index: usize, detail: String },

    #[error("insufficient data for {what}: need {needed}, got {got}")]
    InsufficientData {
        what: String,
        needed: usize,
        got: usize,
    },

    #[error("column `{0}` has zero variance on the training rows")]
    ZeroVariance(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("requested {requested} components but the matrix rank is {rank}")]
    Rank { requested: usize, rank: usize },

    #[error("NIPALS did not converge for component {component} (last relative change {change:.3e})")]
    NonConvergence { component: usize, change: f64 },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Schema(_)
            | Error::EmptyDataset(_)
            | Error::Validation(_)
            | Error::OutOfBounds { .. }
            | Error::InsufficientData { .. }
            | Error::ZeroVariance(_)
            | Error::Domain(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::Shape { .. }
            | Error::Rank { .. }
            | Error::NonConvergence { .. }
            | Error::Degenerate(_)
            | Error::Divergence { .. }
            | Error::IllConditioned(_) => ErrorKind::Model,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
