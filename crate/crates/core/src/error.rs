//! Error type shared by all modules of the crate.

/// Errors reported by the statevector laboratory.
///
/// Numeric degeneracies get their own variants so callers can distinguish
/// "the request was malformed" from "the computation is ill-conditioned and
/// was aborted".
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter was out of range, inconsistent, or otherwise unusable.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A measurement branch was requested whose probability is numerically
    /// zero, so the post-measurement state is undefined.
    #[error("degenerate measurement branch: {0}")]
    DegenerateBranch(String),

    /// A loss normalization constant was too close to zero to divide by.
    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    /// An eigenproblem had a (near-)degenerate ground space, so "the" ground
    /// state is not well defined.
    #[error("degenerate ground space: {0}")]
    DegenerateGroundSpace(String),

    /// A numeric routine failed to reach its accuracy contract.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
