use thiserror::Error;

/// Errors raised by the numerical routines and the input parsers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-range input (bad dimension, bad parameter, bad syntax).
    #[error("invalid input: {0}")]
    Input(String),

    /// A point outside the region where a map or formula is defined.
    #[error("point outside domain: {0}")]
    Domain(String),

    /// An integral or bound that is infinite for the requested exponents.
    #[error("divergent: {0}")]
    Divergence(String),

    /// Degenerate data such as a constant function where a nonconstant one is required.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The reflection produced an image outside the target domain.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// A parameter combination the classification does not cover.
    #[error("indeterminate case: {0}")]
    Indeterminate(String),

    /// The descent iteration increased the objective beyond tolerance.
    #[error("step-size failure: {0}")]
    StepSize(String),

    /// Map evaluation failed at a specific quadrature cell.
    #[error("map evaluation failed at ring {ring}, node {node}: {source}")]
    MapEvaluation {
        ring: usize,
        node: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Indeterminate(_))
    }
}
