use thiserror::Error;

/// Errors raised by the variation engines, solvers and witness builder.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the documented range of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A sequence or function violates its structural invariants.
    #[error("invalid input: {0}")]
    Domain(String),

    /// The request is well-formed but exceeds a configured capacity.
    #[error("capacity exceeded: {what} (cap {cap})")]
    Capacity { what: String, cap: u64 },

    /// A bounded witness search ran out of candidates.
    #[error(
        "witness search exhausted for stage {stage} below cap {cap}: smallest ratio {best_ratio:e} at n = {best_n} (threshold {threshold:e})"
    )]
    SearchExhausted {
        stage: u32,
        cap: u64,
        best_ratio: f64,
        best_n: u64,
        threshold: f64,
    },

    /// A numerical self-check did not hold.
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
