//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SlopeError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("domain error at index {index}: {reason}")]
    DomainAt { index: usize, reason: String },

    #[error("invalid weight sequence: {0}")]
    InvalidSequence(String),

    #[error("ill-conditioned correction: {skipped} of {total} Monte Carlo draws skipped")]
    Conditioning { skipped: usize, total: usize },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SlopeError>;
