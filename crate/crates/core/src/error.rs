use thiserror::Error;

/// Errors produced by the solvers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated series or a quadrature could not reach the requested tolerance.
    #[error("{what}: tolerance not met (achieved bound {achieved:.3e})")]
    ToleranceNotMet { what: String, achieved: f64 },

    /// A computed boundary trace or grid value left the admissible range.
    #[error("instability in {what} at node {node} (t = {time:.6e}): value {value:.6e}")]
    Instability {
        what: String,
        node: usize,
        time: f64,
        value: f64,
    },

    /// The implicit step of a time-marching solver could not be solved.
    #[error("{what}: iteration limit reached after {iterations} iterations")]
    IterationLimit { what: String, iterations: usize },

    /// Invalid configuration or parameters.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by user input rather than numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
