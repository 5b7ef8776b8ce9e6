use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("index {index} out of range 0..={last}")]
    IndexOutOfRange { index: i64, last: i64 },
    #[error("pencil is not regular (largest normalized probe determinant {max_probe:e})")]
    Regularity { max_probe: f64 },
    #[error("ill-conditioned decomposition: residual {residual:e} exceeds bound {bound:e} ({stage})")]
    IllConditioned {
        stage: &'static str,
        residual: f64,
        bound: f64,
    },
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("matrix is not nilpotent within {max_power} powers")]
    NotNilpotent { max_power: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fractional system not solvable: {}", join(.violations))]
    Solvability { violations: Vec<String> },
    #[error("series did not converge within {terms} terms")]
    Convergence { terms: usize },
    #[error("input horizon too short: index {required} needed, last available {available}")]
    Horizon { required: usize, available: i64 },
    #[error("inconsistent initial condition (residual {residual:e}, tolerance {tolerance:e})")]
    InconsistentInitialCondition { residual: f64, tolerance: f64 },
    #[error("oracle not applicable: {0}")]
    OracleInapplicable(String),
}

fn join(items: &[String]) -> String {
    items.join("; ")
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn dim_error(what: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::Dimension {
        what,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
