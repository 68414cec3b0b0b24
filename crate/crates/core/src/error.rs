//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller violated a precondition (mismatched base points, too few jet orders, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical procedure failed (non-convergence, overflow, degeneracy).
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A structural assumption on the model does not hold.
    #[error("assumption violated: {0}")]
    Assumption(String),
    /// Invalid integration contour or critical point geometry.
    #[error("geometry error: {0}")]
    Geometry(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for errors caused by bad input rather than by the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Usage(_) | Error::Domain(_) | Error::Config(_))
    }
}

impl From<crate::special::BetaDomainError> for Error {
    fn from(e: crate::special::BetaDomainError) -> Self {
        Error::Domain(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
