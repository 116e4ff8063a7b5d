use mssa_core::MssaError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{0}")]
    NoSolution(MssaError),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Core(MssaError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 2 validation, 3 no solution, 4 data, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NoSolution(_) => 3,
            CliError::Data(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<MssaError> for CliError {
    fn from(e: MssaError) -> Self {
        match e {
            MssaError::NoSolution { .. }
            | MssaError::InfeasibleCorrelation { .. }
            | MssaError::IncompleteSupport { .. }
            | MssaError::RootSearch(_) => CliError::NoSolution(e),
            MssaError::Data(_) | MssaError::Csv(_) => CliError::Data(e.to_string()),
            MssaError::InvalidDimension(_)
            | MssaError::DimensionMismatch { .. }
            | MssaError::InvalidParameter(_)
            | MssaError::NotPositiveDefinite(_)
            | MssaError::NonStationary(_)
            | MssaError::ZeroTarget => CliError::Validation(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
