use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate matrix: smallest eigenvalue {min_eigenvalue:e} not above tolerance {tol:e}")]
    DegenerateMatrix { min_eigenvalue: f64, tol: f64 },
    #[error("matrix dimension {0} unsupported (1..=4)")]
    Dimension(usize),
    #[error("weight evaluated at singular point {0:?}")]
    Singularity(Vec<f64>),
    #[error("integrand is not integrable near {0:?} (shell contributions do not decay)")]
    Integrability(Vec<f64>),
    #[error("invalid variant: {0}")]
    InvalidVariant(String),
    #[error("invalid exponent p = {p}: {requirement}")]
    InvalidExponent { p: f64, requirement: &'static str },
    #[error("divergent weight: {0}")]
    Divergence(String),
    #[error("cube leaves the working domain: {0}")]
    OutOfDomain(String),
    #[error("level not resolvable: {0}")]
    Resolution(String),
    #[error("scale out of range: {0}")]
    Range(String),
    #[error("ellipsoid fit did not converge after {iterations} iterations (violation {violation:e})")]
    Fit { iterations: usize, violation: f64 },
    #[error("reducing family does not cover {0}")]
    Coverage(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("container format: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
