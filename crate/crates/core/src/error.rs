use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into input errors (bad arguments, malformed configuration) and
/// defects (a computation broke an invariant it is supposed to guarantee). The CLI
/// maps the two classes to different exit codes, see [`Error::is_defect`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}, expected 2, 3 or 4")]
    UnsupportedDim(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: entry ({i},{j}) differs from ({j},{i})")]
    NotSymmetric { i: usize, j: usize },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("eigenvalue {0} is not positive")]
    NonPositiveEigenvalue(f64),

    #[error("Jacobi eigen-iteration did not converge after {0} sweeps")]
    EigenNonConvergence(usize),

    #[error("lattice enumeration exceeded {0} candidate vectors")]
    SearchCapExceeded(usize),

    #[error("basis reduction exceeded {0} steps")]
    ReductionCapExceeded(usize),

    #[error("lattice coordinate overflow")]
    Overflow,

    #[error("mesh defect: {0}")]
    MeshDefect(String),

    #[error("no simplex of the mesh contains the direction {0:?}")]
    CoveringDefect(Vec<i64>),

    #[error("iteration did not converge after {sweeps} sweeps (last change {last_change:e})")]
    NonConvergence { sweeps: usize, last_change: f64 },

    #[error("determinant must be 1, got {0}")]
    DetNotOne(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for internal defects, false for errors caused by bad input.
    pub fn is_defect(&self) -> bool {
        matches!(
            self,
            Error::EigenNonConvergence(_)
                | Error::SearchCapExceeded(_)
                | Error::ReductionCapExceeded(_)
                | Error::Overflow
                | Error::MeshDefect(_)
                | Error::CoveringDefect(_)
                | Error::NonConvergence { .. }
                | Error::BoundViolation(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
