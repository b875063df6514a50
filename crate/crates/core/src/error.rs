use thiserror::Error;

/// Errors raised by validation and conversions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MasError {
    #[error("item {item}: text length {text} exceeds speech length {speech}")]
    InfeasibleLengths {
        item: usize,
        text: usize,
        speech: usize,
    },
    #[error("item {item}: non-finite value at text {text}, frame {frame} (1-based)")]
    NonFinite {
        item: usize,
        text: usize,
        frame: usize,
    },
    #[error("item {item}: |value| above {limit:e} at text {text}, frame {frame} (1-based)")]
    MagnitudeTooLarge {
        item: usize,
        text: usize,
        frame: usize,
        limit: f64,
    },
    #[error("item {item}: valid lengths must be at least 1 (got text {text}, speech {speech})")]
    ZeroDim {
        item: usize,
        text: usize,
        speech: usize,
    },
    #[error("item {item}: speech length {speech} exceeds the supported maximum {max}")]
    SpeechTooLong {
        item: usize,
        speech: usize,
        max: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid alignment matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{paths} monotonic paths exceeds the enumeration limit {limit}")]
    TooLarge { paths: u128, limit: u128 },
}

impl MasError {
    /// Batch item the error refers to, if any.
    pub fn item(&self) -> Option<usize> {
        match self {
            MasError::InfeasibleLengths { item, .. }
            | MasError::NonFinite { item, .. }
            | MasError::MagnitudeTooLarge { item, .. }
            | MasError::ZeroDim { item, .. }
            | MasError::SpeechTooLong { item, .. } => Some(*item),
            _ => None,
        }
    }
}

pub type Result<T, E = MasError> = std::result::Result<T, E>;
