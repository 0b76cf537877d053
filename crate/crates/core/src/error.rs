use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("operator is identically zero")]
    ZeroOperator,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no reference solution attached to instance `{0}`")]
    MissingReference(String),
    #[error("proximal step produced a non-finite value")]
    NonFiniteProx,
    #[error("conjugate is infinite at the projected point")]
    ConjugateOutsideDomain,
    #[error("non-finite iterate at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("quadratic form is indefinite (smallest eigenvalue {min_eigenvalue:e})")]
    IndefiniteQuadraticForm { min_eigenvalue: f64 },
    #[error("bound {0} does not apply to this instance")]
    NotApplicable(&'static str),
    #[error("no finite ratios ({infinite} infinite, {undefined} undefined)")]
    NoFiniteRatios { infinite: usize, undefined: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("first row and first column describe a non-symmetric Toeplitz matrix")]
    NonSymmetricToeplitz,
    #[error("inner solver did not converge after {iterations} iterations")]
    InnerSolveFailed { iterations: usize },
    #[error("power iteration did not converge")]
    NoConvergence,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown selector `{0}`")]
    UnknownSelector(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
