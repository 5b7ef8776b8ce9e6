use descriptor_core::Error as CoreError;
use thiserror::Error;

/// Command failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid system definition: {0}")]
    Structure(String),
    #[error("singular pencil: {0}")]
    SingularPencil(String),
    #[error("inconsistent initial condition: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Inconsistent { residual: f64, tolerance: f64 },
    #[error("{0}")]
    Horizon(String),
    #[error("not solvable: {}", .0.join("; "))]
    Solvability(Vec<String>),
    #[error("oracle check failed: {0}")]
    Oracle(String),
    #[error(transparent)]
    Core(CoreError),
}

impl CliError {
    pub fn missing(field: &str) -> Self {
        Self::Structure(format!("missing field `{field}`"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) | Self::Io(_) | Self::Structure(_) | Self::SingularPencil(_) | Self::Core(_) => 1,
            Self::Inconsistent { .. } => 2,
            Self::Horizon(_) => 3,
            Self::Solvability(_) => 4,
            Self::Oracle(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Horizon { .. } => Self::Horizon(e.to_string()),
            CoreError::InconsistentInitialCondition { residual, tolerance } => Self::Inconsistent { residual, tolerance },
            CoreError::Solvability { violations } => Self::Solvability(violations),
            CoreError::Regularity { .. } => Self::SingularPencil(e.to_string()),
            CoreError::Dimension { .. } => Self::Structure(e.to_string()),
            other => Self::Core(other),
        }
    }
}
