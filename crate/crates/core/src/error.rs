use thiserror::Error;

pub type Result<T> = std::result::Result<T, MssaError>;

#[derive(Debug, Error)]
pub enum MssaError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("model is not stationary: {0}")]
    NonStationary(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("target filter has zero weights within the predictor window")]
    ZeroTarget,

    /// Constraint outside the attainable autocorrelation range of length-L filters.
    #[error("no solution: |rho| = {rho:.6} is not below rho_max(L) = {rho_max:.6} (exterior point)")]
    NoSolution { rho: f64, rho_max: f64 },

    #[error("incomplete spectral support: MSE predictor has no weight on eigenvector {index}")]
    IncompleteSupport { index: usize },

    #[error("infeasible target correlation {value:.6}: admissible range is ({lower:.6}, {upper:.6})")]
    InfeasibleCorrelation { value: f64, lower: f64, upper: f64 },

    #[error("root search failed: {0}")]
    RootSearch(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
