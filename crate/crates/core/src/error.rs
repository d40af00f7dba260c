use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("size cap exceeded: {0}")]
    Size(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not exposable: {reason}")]
    NotExposable { reason: String, points: Vec<usize> },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("belief on the simplex boundary: {0}")]
    Boundary(String),
    #[error("inapplicable: {0}")]
    Inapplicable(String),
    #[error("assertion failure: {0}")]
    AssertionFailure(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DimensionError",
            Error::Invalid(_) => "ValidationError",
            Error::Precondition(_) => "PreconditionError",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::Size(_) => "SizeError",
            Error::Unsupported(_) => "UnsupportedError",
            Error::NotExposable { .. } => "NotExposable",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::Boundary(_) => "BoundaryError",
            Error::Inapplicable(_) => "InapplicableError",
            Error::AssertionFailure(_) => "AssertionFailure",
        }
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure(_) | Error::InvariantViolation(_) | Error::AssertionFailure(_)
        )
    }
}

pub(crate) fn dim_check(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what}: got {got}, expected {want}")));
    }
    Ok(())
}
