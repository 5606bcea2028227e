use thiserror::Error;

use crate::automaton::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol {symbol} out of range for alphabet of size {num_symbols}")]
    SymbolOutOfRange { symbol: usize, num_symbols: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("supervision admits no labeling with positive weight")]
    InfeasibleSupervision,

    #[error("{kind} supervision requires K=2, got K={num_symbols}")]
    UnsupportedCardinality {
        kind: &'static str,
        num_symbols: usize,
    },

    #[error("invalid supervision spec: {0}")]
    InvalidSpec(String),

    #[error("invalid automaton: {}", .0.iter().map(|v| v.code()).collect::<Vec<_>>().join(", "))]
    InvalidNfa(Vec<Violation>),

    #[error("enumeration of {labelings} labelings exceeds the oracle limit of {limit}")]
    TooLarge { labelings: f64, limit: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid probability table: {0}")]
    InvalidProbs(String),

    #[error("automaton weight disagrees with annotation semantics on labeling {0:?}")]
    CompilerMismatch(Vec<usize>),

    #[error("group {index}: {source}")]
    Group { index: usize, source: Box<Error> },
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SymbolOutOfRange { .. } => "SymbolOutOfRange",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::InfeasibleSupervision => "InfeasibleSupervision",
            Error::UnsupportedCardinality { .. } => "UnsupportedCardinality",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidNfa(_) => "InvalidNfa",
            Error::TooLarge { .. } => "TooLarge",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidProbs(_) => "InvalidProbs",
            Error::CompilerMismatch(_) => "CompilerMismatch",
            Error::Group { source, .. } => source.code(),
        }
    }

    /// Integer status for foreign callers. Zero is reserved for success.
    pub fn status(&self) -> i32 {
        match self {
            Error::SymbolOutOfRange { .. } => 1,
            Error::ShapeMismatch { .. } => 2,
            Error::InfeasibleSupervision => 3,
            Error::UnsupportedCardinality { .. } => 4,
            Error::InvalidSpec(_) => 5,
            Error::InvalidNfa(_) => 6,
            Error::TooLarge { .. } => 7,
            Error::InvalidParams(_) => 8,
            Error::InvalidProbs(_) => 9,
            Error::CompilerMismatch(_) => 10,
            Error::Group { source, .. } => source.status(),
        }
    }

    /// Attaches the index of the dataset group that produced the error.
    pub fn in_group(self, index: usize) -> Self {
        Error::Group {
            index,
            source: Box::new(self),
        }
    }

    /// The error with any group context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Group { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn shape(expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            found: found.into(),
        }
    }
}
