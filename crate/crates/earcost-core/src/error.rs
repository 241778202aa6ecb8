//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the feature, model, evaluation and fixed-point layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Audio shorter than one analysis window, wrong rate, empty, etc.
    #[error("insufficient audio: {0}")]
    InsufficientAudio(String),

    /// WAV container problems (not RIFF, stereo, not 16-bit PCM, ...).
    #[error("unsupported wav: {0}")]
    UnsupportedWav(String),

    /// Shape disagreement between an input and a model.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Training set does not contain both classes.
    #[error("training data must contain both classes")]
    SingleClass,

    /// Fewer data points than a fit or sample requires.
    #[error("not enough data: need {needed}, have {available}")]
    NotEnoughData { needed: usize, available: usize },

    /// A NaN or infinity surfaced where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Malformed serialized model or data file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
