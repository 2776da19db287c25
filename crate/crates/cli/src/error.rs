use supjcir_core::Error as CoreError;
use thiserror::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Fit(String),
    #[error("{0}")]
    Inadmissible(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Fit(_) => 3,
            Self::Inadmissible(_) => 4,
            Self::Validation(_) => 5,
            Self::Numeric(_) => 1,
        }
    }

    /// Classify a core error raised while evaluating a risk query.
    pub fn from_query(e: CoreError) -> Self {
        match e {
            CoreError::Inadmissible(_)
            | CoreError::ParameterOutOfRange(_)
            | CoreError::Divergent(_)
            | CoreError::DomainError { .. } => Self::Inadmissible(e.to_string()),
            CoreError::InvalidParameter { .. } | CoreError::InvalidInput(_) => {
                Self::Input(e.to_string())
            }
            other => Self::Numeric(other.to_string()),
        }
    }

    /// Classify a core error raised at the named fitting stage.
    pub fn from_fit(stage: &str, e: CoreError) -> Self {
        let msg = format!("{stage}: {e}");
        match e {
            CoreError::InvalidParameter { .. } | CoreError::InvalidInput(_) => Self::Input(msg),
            _ => Self::Fit(msg),
        }
    }

    pub fn input(e: impl std::fmt::Display) -> Self {
        Self::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
