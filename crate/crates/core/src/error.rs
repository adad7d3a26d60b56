use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv schema error: {0}")]
    Schema(String),

    /// A data row failed validation. `row` is the 1-based index of the body row.
    #[error("validation error in row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tensor quadrature over {dim} dimensions exceeds the guard of {max}")]
    DimensionGuard { dim: usize, max: usize },

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("divergent integral: survival function vanishes at t = {t}")]
    Divergence { t: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// `true` for errors caused by bad input (files, schemas, parameters) as opposed
    /// to numeric breakdowns of the estimators.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Schema(_)
                | Error::Validation { .. }
                | Error::InvalidParameter(_)
        )
    }
}
