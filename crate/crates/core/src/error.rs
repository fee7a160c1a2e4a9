//! Error type shared across the engine.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SageError>;

#[derive(Debug, Error)]
pub enum SageError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("image is {height}x{width}, expected square")]
    NotSquare { height: usize, width: usize },

    #[error("expected {expected} channels, got {got}")]
    ChannelCount { expected: usize, got: usize },

    #[error("entry ({row}, {col}, {channel}) = {value} is outside [0, 1]")]
    ValueOutOfRange {
        row: usize,
        col: usize,
        channel: usize,
        value: f32,
    },

    #[error("{context}: sizes {left} and {right} do not match")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("offset ({di}, {dj}) out of range for side {side}")]
    OffsetOutOfRange { di: i32, dj: i32, side: usize },

    #[error("{path}: {detail}")]
    Format { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
