use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("perturbation mode {mode} is not resolvable on a grid with Mx = {mx} (need mode < Mx/2)")]
    Aliasing { mode: usize, mx: usize },

    #[error("parameter vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no unstable root found for mode {mode} (best residual {best_residual:.3e})")]
    NoUnstableRoot { mode: i32, best_residual: f64 },

    #[error("simulation failed at step {step}: {reason}")]
    RunFailed { step: usize, reason: String },

    #[error("objective evaluation failed at parameter index {index}")]
    GradientFailure { index: usize },

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("landscape error: {0}")]
    Landscape(String),

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
