//! Error types shared across the solver.

use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum VcaError {
    /// An argument is outside its mathematical domain (bad site index,
    /// non-positive broadening, mismatched grids, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A run configuration is inconsistent or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A desk-scale resource guard was exceeded (register too large for
    /// dense simulation).
    #[error("resource guard: {0}")]
    Resource(String),

    /// A numerical procedure did not reach its requested accuracy.
    #[error("numerical accuracy: {0}")]
    Numerics(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VcaError>;

impl VcaError {
    pub fn domain(msg: impl Into<String>) -> Self {
        VcaError::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        VcaError::Config(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        VcaError::Resource(msg.into())
    }
    pub fn numerics(msg: impl Into<String>) -> Self {
        VcaError::Numerics(msg.into())
    }
}
