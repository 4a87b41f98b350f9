use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GasketError {
    /// Inputs that do not belong together or violate a precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested level would not fit in memory or in the integer address type.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The operation is not defined for this boundary functional (e.g. prox of a nonconvex kind).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver did not converge after {iterations} iterations (KKT residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, GasketError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GasketError::Domain(msg.into()))
}
