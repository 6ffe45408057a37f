//! Repeating bit masks.
//!
//! Every lane operation isolates lanes, lane MSBs or spacer bits with a mask of
//! the form "`len` ones, repeated every `stride` bits, starting at `start`".

use crate::error::{Result, SamdError};

/// A strided bit pattern over a 64- or 128-bit word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mask {
    value: u128,
    word_bits: u32,
}

impl Mask {
    pub fn value(self) -> u128 {
        self.value
    }

    pub fn word_bits(self) -> u32 {
        self.word_bits
    }

    /// The mask as a machine word. Only meaningful for 64-bit masks.
    pub fn as_u64(self) -> u64 {
        debug_assert_eq!(self.word_bits, 64);
        self.value as u64
    }

    pub fn as_u128(self) -> u128 {
        self.value
    }
}

/// Lays `len` ones at `start`, `start + stride`, ... up to (not including)
/// bit `word_bits`. A trailing group that straddles the word end is truncated.
///
/// Rejects `start >= word_bits`, `len == 0`, `len > stride`, `stride > word_bits`
/// and word widths other than 64 and 128.
pub fn build_mask(start: u32, len: u32, stride: u32, word_bits: u32) -> Result<Mask> {
    let in_domain = (word_bits == 64 || word_bits == 128)
        && start < word_bits
        && len >= 1
        && len <= stride
        && stride <= word_bits;
    if !in_domain {
        return Err(SamdError::MaskDomain {
            start,
            len,
            stride,
            word_bits,
        });
    }
    Ok(Mask {
        value: fill(start, len, stride, word_bits),
        word_bits,
    })
}

/// Unchecked mask construction for callers that have already validated a format.
pub(crate) const fn fill(start: u32, len: u32, stride: u32, word_bits: u32) -> u128 {
    let sub = if len >= 128 {
        u128::MAX
    } else {
        (1u128 << len) - 1
    };
    let mut mask = 0u128;
    let mut i = start;
    while i < word_bits {
        mask |= sub << i;
        i += stride;
    }
    if word_bits < 128 {
        mask &= (1u128 << word_bits) - 1;
    }
    mask
}

/// Ones in the most significant bit of every `w`-bit lane.
pub fn msb_lane_mask(w: u32) -> Result<Mask> {
    lane_width(w)?;
    build_mask(w - 1, 1, w, 64)
}

/// Ones in the least significant bit of every `w`-bit lane.
pub fn lsb_lane_mask(w: u32) -> Result<Mask> {
    lane_width(w)?;
    build_mask(0, 1, w, 64)
}

/// All bits of the odd-numbered `w`-bit lanes.
pub fn odd_lane_mask(w: u32) -> Result<Mask> {
    lane_width(w)?;
    build_mask(w, w, 2 * w, 64)
}

/// All bits of the even-numbered `w`-bit lanes.
pub fn even_lane_mask(w: u32) -> Result<Mask> {
    lane_width(w)?;
    build_mask(0, w, 2 * w, 64)
}

/// [`msb_lane_mask`] over a 128-bit product word.
pub fn msb_lane_mask_wide(w: u32) -> Result<Mask> {
    if !(2..=128).contains(&w) {
        return Err(SamdError::MaskDomain {
            start: w.saturating_sub(1),
            len: 1,
            stride: w,
            word_bits: 128,
        });
    }
    build_mask(w - 1, 1, w, 128)
}

fn lane_width(w: u32) -> Result<()> {
    if (2..=64).contains(&w) {
        Ok(())
    } else {
        Err(SamdError::MaskDomain {
            start: w.saturating_sub(1),
            len: 1,
            stride: w,
            word_bits: 64,
        })
    }
}
