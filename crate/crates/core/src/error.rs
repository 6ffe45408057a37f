use thiserror::Error;

use crate::format::Signedness;

/// Contract violations at the boundary of the library.
///
/// Arithmetic on already-packed words does not return these; it asserts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamdError {
    #[error("mask parameters out of domain: start={start} len={len} stride={stride} word_bits={word_bits}")]
    MaskDomain {
        start: u32,
        len: u32,
        stride: u32,
        word_bits: u32,
    },

    #[error("lane width {0} is outside 2..=8")]
    LaneWidth(u32),

    #[error("stride {stride} is not valid for {bits}-bit lanes: {reason}")]
    Stride {
        bits: u32,
        stride: u32,
        reason: &'static str,
    },

    #[error("value {value} does not fit a {bits}-bit {signedness} lane")]
    ValueRange {
        value: i64,
        bits: u32,
        signedness: Signedness,
    },

    #[error("{count} values do not fit in {capacity} lanes")]
    TooManyLanes { count: usize, capacity: usize },

    #[error(
        "stride {stride} leaves no headroom for a {taps}-tap signed convolution of {bits}-bit values; \
         the minimal admissible stride is {min_stride}"
    )]
    ConvHeadroom {
        bits: u32,
        taps: usize,
        stride: u32,
        min_stride: u32,
    },

    #[error("convolution geometry: {0}")]
    ConvGeometry(String),

    #[error("format mismatch: {0}")]
    FormatMismatch(String),

    #[error("empty operand: {0}")]
    Empty(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed tensor file: {0}")]
    TensorFile(String),
}

pub type Result<T, E = SamdError> = std::result::Result<T, E>;
