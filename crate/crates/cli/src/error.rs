use std::path::Path;

use thiserror::Error;

/// Failures surfaced to the shell. Usage and input problems exit with 2,
/// computational failures with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Compute(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<hawkes_granger::Error> for CliError {
    fn from(e: hawkes_granger::Error) -> Self {
        use hawkes_granger::Error as E;
        match e {
            E::Parse { .. }
            | E::NonNumeric { .. }
            | E::Config(_)
            | E::InvalidArgument(_)
            | E::VocabularyMismatch(_)
            | E::InsufficientData(_) => CliError::Input(e.to_string()),
            E::Domain { .. }
            | E::RankDeficient(_)
            | E::Infeasible(_)
            | E::CriterionUndefined { .. }
            | E::BootstrapFailures { .. } => CliError::Compute(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
