use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("basepoint mismatch: jets live at different points")]
    BasepointMismatch,

    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("multi-index of order {index_order} exceeds jet order {jet_order}")]
    IndexOutOfRange { index_order: usize, jet_order: usize },

    #[error("point {0} appears more than once")]
    DuplicatePoint(usize),

    #[error("point is not part of the bundle")]
    UnknownPoint,

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("subspace is not closed under the jet module action")]
    NotSubmodule,

    #[error("jet is not invertible (constant term is zero)")]
    NotInvertible,

    #[error("invalid modulus of continuity: {0}")]
    InvalidModulus(String),

    #[error("point lies outside the extension domain")]
    OutsideDomain,
}

pub type Result<T> = std::result::Result<T, Error>;
