use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for CLI exit codes and FFI status values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input: bad names, shapes, flags, expressions.
    Usage,
    /// The point lies outside a model's admissible region.
    Domain,
    /// Degeneracy, non-convergence, failed tracking, singular metrics.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {mode} out of range for a {modes}-mode basis")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("operator is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("state {index} sits on a degenerate gap ({gap:e})")]
    Degenerate { index: usize, gap: f64 },

    #[error("truncation not converged: {0}")]
    NotConverged(String),

    #[error("state tracking failed: best overlap {overlap:.4} below {threshold}")]
    TrackingFailed { overlap: f64, threshold: f64 },

    #[error("{model}: point violates {constraint}")]
    Domain { model: String, constraint: String },

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("{model} provides no closed form for '{quantity}'")]
    UnsupportedQuantity { model: String, quantity: String },

    #[error("invalid quantum numbers: {0}")]
    QuantumNumbers(String),

    #[error("singular metric: {0}")]
    SingularMetric(String),

    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("uncertainty bound violated: {0}")]
    Uncertainty(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain { .. } => ErrorKind::Domain,
            Error::NotHermitian { .. }
            | Error::EigenFailure(_)
            | Error::Degenerate { .. }
            | Error::NotConverged(_)
            | Error::TrackingFailed { .. }
            | Error::SingularMetric(_)
            | Error::Uncertainty(_) => ErrorKind::Numerical,
            _ => ErrorKind::Usage,
        }
    }

    pub(crate) fn domain(model: &str, constraint: impl Into<String>) -> Self {
        Error::Domain { model: model.to_string(), constraint: constraint.into() }
    }

    pub(crate) fn unsupported(model: &str, quantity: impl std::fmt::Display) -> Self {
        Error::UnsupportedQuantity { model: model.to_string(), quantity: quantity.to_string() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
