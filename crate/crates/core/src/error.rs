use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty operator")]
    Empty,

    #[error("operator is not Hermitian (max |A - A^dagger| = {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("negative eigenvalue {0:.3e}")]
    NegativeEigenvalue(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem split {dims:?} does not match dimension {dim}")]
    InvalidSplit { dims: Vec<usize>, dim: usize },

    #[error("charges do not commute (max |[L_j, L_k]| = {0:.3e})")]
    NonCommuting(f64),

    #[error("{quantity} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("entropy not preserved: {before} -> {after}")]
    EntropyNotPreserved { before: f64, after: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular covariance matrix: target lies on the boundary of the charge region")]
    SingularCovariance,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Coarse classification used by the command line exit-code contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Input does not describe a valid operator, state or split.
    Schema,
    /// Valid input outside the numeric domain of the requested quantity.
    Domain,
    /// The requested construction degenerates (no heat drawn, sentinel limits).
    Degenerate,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotSquare { .. }
            | Error::Empty
            | Error::NotHermitian(_)
            | Error::BadTrace(_)
            | Error::NegativeEigenvalue(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidSplit { .. }
            | Error::NonCommuting(_) => ErrorKind::Schema,
            Error::Degenerate(_) => ErrorKind::Degenerate,
            _ => ErrorKind::Domain,
        }
    }
}
