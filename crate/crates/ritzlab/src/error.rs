use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),

    #[error("expected {expected} grid values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("finite-difference step must be positive, got {0}")]
    InvalidFdStep(f64),

    #[error("non-finite {quantity} at epoch {epoch}{}", coordinate.map(|c| format!(", coordinate {c}")).unwrap_or_default())]
    NonFinite {
        quantity: &'static str,
        epoch: usize,
        coordinate: Option<usize>,
    },

    #[error("non-finite energy probing coordinate {coordinate}")]
    NonFiniteProbe { coordinate: usize },

    #[error("csv row has {got} fields but header declares {expected}")]
    RowWidthMismatch { expected: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
