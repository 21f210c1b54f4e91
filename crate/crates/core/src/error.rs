use thiserror::Error;

/// Errors raised by graph construction, operators, energies and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("vertices `{0}` and `{1}` are not adjacent")]
    NotAdjacent(String, String),

    #[error("graph functions are bound to different graphs")]
    BindingMismatch,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// A structural hypothesis (potential bounds, minimizing vertex, ...) fails
    /// on the graph at hand.
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("invalid nonlinearity model: {0}")]
    Model(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
