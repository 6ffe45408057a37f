//! Lane layouts and the boundary between plain integers and packed words.
//!
//! Lane 0 is the least significant lane. A lane's value bits start at
//! `lane * stride`; anything between the value bits and the next lane is a
//! spacer. Bits above the last whole lane are dead and always zero.

use std::fmt;

use crate::bitmask::fill;
use crate::error::{Result, SamdError};

pub const WORD_BITS: u32 = 64;
pub const WIDE_BITS: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signedness {
    Signed,
    Unsigned,
}

impl fmt::Display for Signedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signedness::Signed => "signed",
            Signedness::Unsigned => "unsigned",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Lanes abut: stride equals the value width.
    Dense,
    /// One permanent spacer bit above each value: stride is `bits + 1`.
    PermSpacer,
    /// A value in the low bits of each `stride`-bit lane, zero spacers above.
    Spaced { stride: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LaneFormat {
    bits: u32,
    signedness: Signedness,
    layout: Layout,
}

impl LaneFormat {
    pub fn new(bits: u32, signedness: Signedness, layout: Layout) -> Result<Self> {
        if !(2..=8).contains(&bits) {
            return Err(SamdError::LaneWidth(bits));
        }
        if let Layout::Spaced { stride } = layout {
            if stride <= bits {
                return Err(SamdError::Stride {
                    bits,
                    stride,
                    reason: "a spaced lane needs at least one spacer bit",
                });
            }
            if stride > WORD_BITS {
                return Err(SamdError::Stride {
                    bits,
                    stride,
                    reason: "a lane cannot be wider than the word",
                });
            }
        }
        Ok(Self {
            bits,
            signedness,
            layout,
        })
    }

    pub fn dense(bits: u32, signedness: Signedness) -> Result<Self> {
        Self::new(bits, signedness, Layout::Dense)
    }

    pub fn perm_spacer(bits: u32, signedness: Signedness) -> Result<Self> {
        Self::new(bits, signedness, Layout::PermSpacer)
    }

    pub fn spaced(bits: u32, signedness: Signedness, stride: u32) -> Result<Self> {
        Self::new(bits, signedness, Layout::Spaced { stride })
    }

    /// Convolution layout with the default stride `2 * (bits + 1)`.
    pub fn conv_spaced(bits: u32, signedness: Signedness) -> Result<Self> {
        Self::spaced(bits, signedness, 2 * (bits + 1))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn stride(&self) -> u32 {
        match self.layout {
            Layout::Dense => self.bits,
            Layout::PermSpacer => self.bits + 1,
            Layout::Spaced { stride } => stride,
        }
    }

    pub fn lanes_per_word(&self) -> usize {
        (WORD_BITS / self.stride()) as usize
    }

    /// Inclusive range of representable lane values.
    pub fn value_range(&self) -> (i64, i64) {
        value_range(self.bits, self.signedness)
    }

    /// Bits covered by whole lanes; everything above is dead.
    pub fn live_mask(&self) -> u64 {
        let used = self.lanes_per_word() as u32 * self.stride();
        if used == WORD_BITS {
            u64::MAX
        } else {
            (1u64 << used) - 1
        }
    }

    /// Value bits of every lane.
    pub fn value_mask(&self) -> u64 {
        fill(0, self.bits, self.stride(), WORD_BITS) as u64 & self.live_mask()
    }

    pub fn with_signedness(self, signedness: Signedness) -> Self {
        Self { signedness, ..self }
    }
}

pub(crate) fn value_range(bits: u32, signedness: Signedness) -> (i64, i64) {
    match signedness {
        Signedness::Signed => (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1),
        Signedness::Unsigned => (0, (1i64 << bits) - 1),
    }
}

/// Sign- or zero-extends the low `bits` of `raw`.
#[inline]
pub fn extend_field(raw: u64, bits: u32, signedness: Signedness) -> i64 {
    let shift = 64 - bits;
    match signedness {
        Signedness::Signed => ((raw << shift) as i64) >> shift,
        Signedness::Unsigned => ((raw << shift) >> shift) as i64,
    }
}

/// One 64-bit word of packed lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamdWord {
    word: u64,
    format: LaneFormat,
}

impl SamdWord {
    pub fn new(word: u64, format: LaneFormat) -> Self {
        Self { word, format }
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn format(&self) -> LaneFormat {
        self.format
    }
}

/// A 128-bit product of two packed words. Output lanes share the operands' stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WideWord {
    value: u128,
    format: LaneFormat,
}

impl WideWord {
    pub fn new(value: u128, format: LaneFormat) -> Self {
        Self { value, format }
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn hi(&self) -> u64 {
        (self.value >> 64) as u64
    }

    pub fn lo(&self) -> u64 {
        self.value as u64
    }

    pub fn format(&self) -> LaneFormat {
        self.format
    }

    pub fn lanes(&self) -> usize {
        (WIDE_BITS / self.format.stride()) as usize
    }

    /// Output lane `j` read as a two's complement number of `stride` bits.
    pub fn lane(&self, j: usize) -> i64 {
        assert!(j < self.lanes(), "lane {j} outside a {}-lane wide word", self.lanes());
        let stride = self.format.stride();
        let raw = (self.value >> (j as u32 * stride)) as u64;
        extend_field(raw, stride, Signedness::Signed)
    }
}

/// Plain integers in the range of a lane type; the reference domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LaneArray {
    values: Vec<i32>,
    bits: u32,
    signedness: Signedness,
}

impl LaneArray {
    pub fn new(values: Vec<i32>, bits: u32, signedness: Signedness) -> Result<Self> {
        if !(2..=8).contains(&bits) {
            return Err(SamdError::LaneWidth(bits));
        }
        let (lo, hi) = value_range(bits, signedness);
        if let Some(&bad) = values.iter().find(|&&v| (v as i64) < lo || (v as i64) > hi) {
            return Err(SamdError::ValueRange {
                value: bad as i64,
                bits,
                signedness,
            });
        }
        Ok(Self {
            values,
            bits,
            signedness,
        })
    }

    pub fn signed(values: Vec<i32>, bits: u32) -> Result<Self> {
        Self::new(values, bits, Signedness::Signed)
    }

    pub fn unsigned(values: Vec<i32>, bits: u32) -> Result<Self> {
        Self::new(values, bits, Signedness::Unsigned)
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<i32> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }
}

/// Packs `values` into one word, lane 0 lowest. Spacers and dead bits are zero.
pub fn pack(values: &LaneArray, format: LaneFormat) -> Result<SamdWord> {
    if values.bits != format.bits || values.signedness != format.signedness {
        return Err(SamdError::FormatMismatch(format!(
            "{}-bit {} values packed as {}-bit {} lanes",
            values.bits, values.signedness, format.bits, format.signedness
        )));
    }
    pack_values(&values.values, format).map(|w| SamdWord::new(w, format))
}

/// [`pack`] for a raw slice; values are range-checked against `format`.
pub fn pack_values(values: &[i32], format: LaneFormat) -> Result<u64> {
    let capacity = format.lanes_per_word();
    if values.len() > capacity {
        return Err(SamdError::TooManyLanes {
            count: values.len(),
            capacity,
        });
    }
    let (lo, hi) = format.value_range();
    let field = (1u64 << format.bits) - 1;
    let stride = format.stride();
    let mut word = 0u64;
    for (i, &v) in values.iter().enumerate() {
        if (v as i64) < lo || (v as i64) > hi {
            return Err(SamdError::ValueRange {
                value: v as i64,
                bits: format.bits,
                signedness: format.signedness,
            });
        }
        word |= ((v as i64 as u64) & field) << (i as u32 * stride);
    }
    Ok(word)
}

/// Reads the first `count` lanes back, sign-extending signed lanes from bit `bits - 1`.
pub fn unpack(word: SamdWord, count: usize) -> LaneArray {
    let format = word.format;
    assert!(
        count <= format.lanes_per_word(),
        "{count} lanes requested from a {}-lane word",
        format.lanes_per_word()
    );
    let values = (0..count).map(|i| lane_value(word.word, i, format) as i32).collect();
    LaneArray {
        values,
        bits: format.bits,
        signedness: format.signedness,
    }
}

#[inline]
pub(crate) fn lane_value(word: u64, lane: usize, format: LaneFormat) -> i64 {
    extend_field(word >> (lane as u32 * format.stride()), format.bits, format.signedness)
}

/// Raw `width`-bit fields at `stride` spacing, e.g. the double-width lanes of a
/// vector scale with permanent spacers.
pub fn unpack_fields(word: u64, stride: u32, width: u32, count: usize) -> Vec<u64> {
    assert!(width >= 1 && width <= stride && stride as usize * count <= WORD_BITS as usize);
    let field = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    (0..count).map(|i| (word >> (i as u32 * stride)) & field).collect()
}

/// Smallest stride whose signed lanes can hold any sum of `taps` products of
/// two signed `bits`-bit values, with the underflow fixup's one bit of slack.
pub fn min_conv_stride(bits: u32, taps: usize) -> u32 {
    let worst = (taps as u64) << (2 * bits - 2);
    // worst must be <= 2^(stride-1) - 1
    (64 - worst.leading_zeros()) + 1
}

/// Checks that a `stride`-bit output lane cannot overflow for a `taps`-tap
/// signed convolution of `bits`-bit values.
pub fn validate_conv_format(bits: u32, taps: usize, stride: u32) -> Result<()> {
    if !(2..=8).contains(&bits) {
        return Err(SamdError::LaneWidth(bits));
    }
    if taps == 0 {
        return Err(SamdError::Empty("convolution kernel"));
    }
    let min_stride = min_conv_stride(bits, taps);
    if stride < min_stride {
        return Err(SamdError::ConvHeadroom {
            bits,
            taps,
            stride,
            min_stride,
        });
    }
    if stride > WORD_BITS {
        return Err(SamdError::Stride {
            bits,
            stride,
            reason: "a lane cannot be wider than the word",
        });
    }
    Ok(())
}

/// Packed tensors serialize as the little-endian bytes of each word, in order.
pub fn words_to_le_bytes(words: &[u64]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

pub fn words_from_le_bytes(bytes: &[u8]) -> Result<Vec<u64>> {
    if bytes.len() % 8 != 0 {
        return Err(SamdError::TensorFile(format!(
            "{} bytes is not a whole number of 64-bit words",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
