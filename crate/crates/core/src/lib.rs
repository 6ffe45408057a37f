//! Sub-word integer lanes packed into machine words.
//!
//! Small signed or unsigned integers (2 to 8 bits) share one `u64`, and
//! ordinary scalar instructions operate on every lane at once. Masks keep
//! carries and borrows from crossing lane boundaries. A single 64x64->128
//! multiply of two spaced words computes a whole 1-D convolution.

pub mod bitmask;
pub mod conv1d;
pub mod conv2d;
pub mod error;
pub mod format;
pub mod lane_arith;
pub mod oracle;
pub mod tensor;

pub use bitmask::{build_mask, even_lane_mask, lsb_lane_mask, msb_lane_mask, msb_lane_mask_wide, odd_lane_mask, Mask};
pub use conv1d::{
    conv1d_long, conv1d_long_counted, conv1d_long_with, count_scalar_ops, native_conv_counted, signed_conv_word,
    signed_conv_word_perm, signed_conv_word_with, word_op_counts, Chunk, ConvGeometry, ConvOperands, ConvOutput,
    ConvPlan, ConvResult, Fixup, SpacerMode, WordOpCounts,
};
pub use conv2d::{direct_conv2d_reference, native8_conv2d, samd_conv2d, samd_conv2d_threads, LayerConfig};
pub use error::{Result, SamdError};
pub use format::{
    min_conv_stride, pack, pack_values, unpack, unpack_fields, validate_conv_format, LaneArray, LaneFormat, Layout,
    SamdWord, Signedness, WideWord,
};
pub use lane_arith::{
    add_permanent_spacer, broadcast, samd_add, samd_mul, samd_mul_counted, samd_sub, scale_permanent_spacers,
    sign_extend_for_mul, vector_scale_wrap, LaneOps, OpCounts, Tally,
};
pub use tensor::QuantTensor;
