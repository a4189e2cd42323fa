use thiserror::Error;

use crate::lags::Lag;

/// Errors raised across the crate.
///
/// Variants are grouped so that callers (notably the CLI) can map them to
/// exit codes: [`Error::is_data_error`] and [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lag set cannot be split into orthogonal pairs: {0}")]
    Pairing(String),

    #[error("no location pairs separated by lag {0}")]
    NoPairs(Lag),

    #[error("zero total kernel weight at lag {0}; try a larger bandwidth")]
    EmptyNeighborhood(Lag),

    #[error("duplicate location ({x}, {y}){}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    DuplicateLocation { x: f64, y: f64, line: Option<usize> },

    #[error("malformed input on line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("grid is incomplete: {0}")]
    IncompleteGrid(String),

    #[error("method {method} is not applicable: {reason}")]
    Incompatible { method: String, reason: String },

    #[error("resampling failed: {0}")]
    Resampling(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate periodogram: {0}")]
    DegeneratePeriodogram(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::NoPairs(_)
                | Error::EmptyNeighborhood(_)
                | Error::DuplicateLocation { .. }
                | Error::Malformed { .. }
                | Error::IncompleteGrid(_)
                | Error::Incompatible { .. }
                | Error::Io(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Resampling(_)
                | Error::Singular(_)
                | Error::Numerical(_)
                | Error::DegeneratePeriodogram(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
