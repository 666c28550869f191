use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the deraining toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A frame index is missing from an otherwise contiguous sequence.
    #[error("sequence gap: frame {index:06} missing from {dir}")]
    SequenceGap { dir: PathBuf, index: u32 },

    /// Raster dimensions (or channel counts) do not agree.
    #[error("shape mismatch: expected {expected_w}x{expected_h}x{expected_c}, got {actual_w}x{actual_h}x{actual_c}")]
    Shape {
        expected_w: u32,
        expected_h: u32,
        expected_c: u8,
        actual_w: u32,
        actual_h: u32,
        actual_c: u8,
    },

    /// Wrong channel count for a channel-specific operation.
    #[error("channel mismatch: expected {expected} channels, got {actual}")]
    Channel { expected: u8, actual: u8 },

    /// The sequence meta file is missing, unreadable, or inconsistent.
    #[error("meta error: {0}")]
    Meta(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// A frame or mask file exists but does not decode to a valid raster.
    #[error("decode error: {0}")]
    Decode(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// An error annotated with the frame index and pipeline stage it occurred in.
    #[error("frame {frame:06}, stage {stage}: {source}")]
    Stage {
        frame: u32,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

impl Error {
    pub fn shape(expected: (u32, u32, u8), actual: (u32, u32, u8)) -> Self {
        Error::Shape {
            expected_w: expected.0,
            expected_h: expected.1,
            expected_c: expected.2,
            actual_w: actual.0,
            actual_h: actual.1,
            actual_c: actual.2,
        }
    }

    pub fn at_stage(self, frame: u32, stage: &'static str) -> Self {
        Error::Stage {
            frame,
            stage,
            source: Box::new(self),
        }
    }

    /// The root error underneath any stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
