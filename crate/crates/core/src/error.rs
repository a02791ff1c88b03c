use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid pauli string {0:?}")]
    InvalidPauli(String),
    #[error("non-finite parameter at index {0}")]
    NonFiniteParameter(usize),
    #[error("expectation value has imaginary residue {0:e}")]
    ImaginaryResidue(f64),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("metric undefined: degenerate distribution")]
    DegenerateDistribution,
    #[error("solve produced a non-finite result")]
    NonFiniteSolution,
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
