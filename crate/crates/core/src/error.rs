use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the domain of the physical model.
    #[error("domain error: {0}")]
    Domain(String),

    /// No parameter choice satisfies the requested fidelity floor.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Photon-number truncation too small for the requested drive.
    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("{context} did not converge (residual {residual:.3e})")]
    NotConverged { context: String, residual: f64 },

    /// A numerical self-check (monotonicity, fit quality) failed.
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
