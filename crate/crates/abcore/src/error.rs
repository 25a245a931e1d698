//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Failure modes of the numerical kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum AbError {
    /// Grid too small (or mismatched) for the requested stencil.
    Dimension(String),
    /// Invalid or degenerate constructor parameter.
    Parameter(String),
    /// Input field outside the mathematical domain of a formula.
    Domain(String),
    /// Inconsistent loop-algebra operands.
    Algebra(String),
    /// Time march diverged.
    Solver(String),
}

impl fmt::Display for AbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbError::Dimension(m) => write!(f, "dimension error: {m}"),
            AbError::Parameter(m) => write!(f, "parameter error: {m}"),
            AbError::Domain(m) => write!(f, "domain error: {m}"),
            AbError::Algebra(m) => write!(f, "algebra error: {m}"),
            AbError::Solver(m) => write!(f, "solver error: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AbError {}

pub type Result<T> = core::result::Result<T, AbError>;
