use thiserror::Error;

use crate::optimize::DesignOutcome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A morphism pattern, effect or functor rule could not handle its input.
    /// `context` names the morphism or functor that failed.
    #[error("domain mismatch in `{context}`: {reason}")]
    DomainMismatch { context: String, reason: String },

    #[error("unit mismatch on `{property}`: `{left}` vs `{right}`")]
    UnitMismatch {
        property: String,
        left: String,
        right: String,
    },

    #[error("non-finite weight for property `{property}`")]
    NonFiniteWeight { property: String },

    #[error("distance table has no entry for ({from}, {to})")]
    MissingTableEntry { from: String, to: String },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("agent `{agent}` does not own object `{object}`")]
    NotOwner { agent: String, object: String },

    #[error("bundle count must be positive")]
    NonPositiveCount,

    #[error("agent `{agent}` has no attribute `{attribute}`")]
    MissingAttribute { agent: String, attribute: String },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("search budget of {budget} evaluations exceeded")]
    SearchBudgetExceeded { budget: usize, best: Box<DesignOutcome> },
}

impl Error {
    pub(crate) fn domain(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::DomainMismatch {
            context: context.into(),
            reason: reason.into(),
        }
    }
}
