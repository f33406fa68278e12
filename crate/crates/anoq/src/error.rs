//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnoqError {
    /// Dimension or link-set mismatch between values and the topology.
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// A value violates its domain invariant (negative backlog, simplex sum
    /// off by more than the tolerance, capacity above the bound, ...).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Trace or reference-policy construction failed; carries the first
    /// violated window when known.
    #[error("construction failed: {0}")]
    Construction(String),

    /// A caller broke a learner contract (nonpositive bound announcement,
    /// loss larger than the announced magnitude, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Scenario file or override is invalid; names the offending key.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// Trace (de)serialization failure.
    #[error("trace format error: {0}")]
    TraceFormat(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AnoqError> = std::result::Result<T, E>;
