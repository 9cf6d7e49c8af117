use thiserror::Error;

/// Errors raised by router construction, evolution and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("router needs at least 2 outputs, got n = {0}")]
    TooFewOutputs(u64),

    #[error("input and output internal vertices coincide (index {0})")]
    PortsCoincide(usize),

    #[error("layout is inconsistent: {0}")]
    InvalidLayout(String),

    #[error("matrix is not Hermitian: max |H - H†| = {0:e}")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("reduced-basis label must be in 1..=6, got {0}")]
    InvalidLabel(usize),

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state is not normalized: norm² = {0}")]
    NotNormalized(f64),

    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("empty {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
