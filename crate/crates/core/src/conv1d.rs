//! Signed 1-D convolution through one wide multiplication per word.
//!
//! Multiplying two words of lanes at stride `S` is polynomial multiplication
//! in base `2^S`: output lane `m` of the 128-bit product collects
//! `sum_i x[i] * k[m - i]`. Kernel lane `t` holds tap `t`, so the product is a
//! true convolution; callers that want cross-correlation reverse the kernel.
//!
//! Signed lanes are sign-extended through their spacers before multiplying.
//! Each negative lane then borrows one from the lane above it, which the
//! underflow fixup repairs after the multiply.
//!
//! Long inputs are cut into non-overlapping blocks of `A` lanes. A block's
//! product spans `A + K - 1` lanes; the top `K - 1` are partial sums that are
//! carried into the low lanes of the next block's product.

use std::fmt;
use std::ops::{BitAnd, BitOr, BitXor, Not, Shl, Shr};

use crate::bitmask::fill;
use crate::error::{Result, SamdError};
use crate::format::{
    extend_field, pack_values, validate_conv_format, LaneArray, LaneFormat, Layout, SamdWord,
    Signedness, WideWord, WIDE_BITS, WORD_BITS,
};
use crate::lane_arith::{sign_extend_word, sign_mask, OpCounts, Tally};

/// How output lanes are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpacerMode {
    /// Lane-wise add with full MSB reconstruction; every lane bit is exact.
    Temporary,
    /// Lane MSBs are spacers. Only the bits below each MSB are maintained.
    Permanent,
}

impl SpacerMode {
    pub fn label(self) -> &'static str {
        match self {
            SpacerMode::Temporary => "temp",
            SpacerMode::Permanent => "perm",
        }
    }
}

impl fmt::Display for SpacerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SpacerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "temp" | "temporary" => Ok(SpacerMode::Temporary),
            "perm" | "permanent" => Ok(SpacerMode::Permanent),
            other => Err(format!("unknown spacer mode {other:?}, expected temp or perm")),
        }
    }
}

/// Correction applied to a signed product for the borrows left by sign extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixup {
    /// Add each lane's sign bit to itself, then restore the MSBs with XOR.
    Underflow,
    /// [`Fixup::Underflow`] without the XOR; lane MSBs are left as spacer flags.
    UnderflowNoXor,
    /// Shift each sign bit onto the next lane's LSB and add. Double-increments
    /// the lane above a stored -1.
    Naive,
    /// No correction.
    None,
}

/// Machine words the convolution kernels run on: `u64` when a whole block
/// product fits in 64 bits, `u128` otherwise.
pub trait LaneWord:
    Copy
    + Eq
    + Default
    + fmt::Debug
    + Send
    + Sync
    + BitAnd<Output = Self>
    + BitOr<Output = Self>
    + BitXor<Output = Self>
    + Not<Output = Self>
    + Shl<u32, Output = Self>
    + Shr<u32, Output = Self>
{
    const BITS: u32;
    fn wrapping_add(self, rhs: Self) -> Self;
    /// Product of two 64-bit two's complement numbers, modulo `2^BITS`.
    fn signed_product(x: u64, k: u64) -> Self;
    fn truncate(v: u128) -> Self;
    fn low64(self) -> u64;
}

impl LaneWord for u64 {
    const BITS: u32 = 64;
    #[inline(always)]
    fn wrapping_add(self, rhs: Self) -> Self {
        u64::wrapping_add(self, rhs)
    }
    #[inline(always)]
    fn signed_product(x: u64, k: u64) -> Self {
        x.wrapping_mul(k)
    }
    #[inline(always)]
    fn truncate(v: u128) -> Self {
        v as u64
    }
    #[inline(always)]
    fn low64(self) -> u64 {
        self
    }
}

impl LaneWord for u128 {
    const BITS: u32 = 128;
    #[inline(always)]
    fn wrapping_add(self, rhs: Self) -> Self {
        u128::wrapping_add(self, rhs)
    }
    #[inline(always)]
    fn signed_product(x: u64, k: u64) -> Self {
        // both operands widen with their sign; a zero-extending cast is wrong
        // whenever the top lane is negative
        (x as i64 as i128).wrapping_mul(k as i64 as i128) as u128
    }
    #[inline(always)]
    fn truncate(v: u128) -> Self {
        v
    }
    #[inline(always)]
    fn low64(self) -> u64 {
        self as u64
    }
}

#[inline(always)]
fn apply_fixup<W: LaneWord, const PERM: bool>(p: W, out_msb: W) -> W {
    let sign = p & out_msb;
    let p = p.wrapping_add(sign);
    if PERM {
        p
    } else {
        p ^ sign
    }
}

/// Lane-wise add of a fixed-up product into an accumulator.
///
/// Permanent mode relies on the fixup's two possible lane states: MSB clear,
/// or MSB set with all lower bits zero. Either way the sum stays inside the lane.
#[inline(always)]
fn lane_add<W: LaneWord, const PERM: bool>(acc: W, p: W, out_msb: W) -> W {
    let low = !out_msb;
    if PERM {
        (acc & low).wrapping_add(p)
    } else {
        let msb = (acc ^ p) & out_msb;
        (acc & low).wrapping_add(p & low) ^ msb
    }
}

/// Lane-wise add of two accumulators.
#[inline(always)]
fn lane_merge<W: LaneWord, const PERM: bool>(a: W, b: W, out_msb: W) -> W {
    if PERM {
        let low = !out_msb;
        (a & low).wrapping_add(b & low)
    } else {
        lane_add::<W, false>(a, b, out_msb)
    }
}

/// Product of two signed spaced words with the chosen underflow correction.
pub fn signed_conv_word_with(vec: SamdWord, kernel: SamdWord, fixup: Fixup) -> Result<WideWord> {
    let f = vec.format();
    if kernel.format() != f {
        return Err(SamdError::FormatMismatch(format!(
            "input {:?} and kernel {:?} differ",
            f,
            kernel.format()
        )));
    }
    let stride = match f.layout() {
        Layout::Spaced { stride } if f.signedness() == Signedness::Signed => stride,
        _ => {
            return Err(SamdError::FormatMismatch(format!(
                "signed convolution needs signed spaced lanes, got {f:?}"
            )))
        }
    };
    if vec.word() & !f.value_mask() != 0 || kernel.word() & !f.value_mask() != 0 {
        return Err(SamdError::FormatMismatch("operand spacers are not zero".into()));
    }
    // taps above the highest nonzero kernel lane contribute nothing
    let taps = (0..f.lanes_per_word())
        .rev()
        .find(|&t| kernel.word() >> (t as u32 * stride) & ((1 << f.bits()) - 1) != 0)
        .map_or(1, |t| t + 1);
    validate_conv_format(f.bits(), taps, stride)?;

    let signs = sign_mask(f);
    let x = sign_extend_word(vec.word(), signs);
    let k = sign_extend_word(kernel.word(), signs);
    let p = u128::signed_product(x, k);
    let out_msb = fill(stride - 1, 1, stride, WIDE_BITS);
    let value = match fixup {
        Fixup::Underflow => apply_fixup::<u128, false>(p, out_msb),
        Fixup::UnderflowNoXor => apply_fixup::<u128, true>(p, out_msb),
        Fixup::Naive => p.wrapping_add((p & out_msb) << 1),
        Fixup::None => p,
    };
    Ok(WideWord::new(value, f))
}

/// Signed convolution of two packed words: every output lane of the result
/// holds its exact convolution term as an `S`-bit two's complement number.
pub fn signed_conv_word(vec: SamdWord, kernel: SamdWord) -> Result<WideWord> {
    signed_conv_word_with(vec, kernel, Fixup::Underflow)
}

/// [`signed_conv_word`] without the final XOR. The bits below each output
/// lane's MSB are exact; the MSB is set only in a lane that held a stored -1,
/// and then every other bit of that lane is zero.
pub fn signed_conv_word_perm(vec: SamdWord, kernel: SamdWord) -> Result<WideWord> {
    signed_conv_word_with(vec, kernel, Fixup::UnderflowNoXor)
}

/// One packed input word and one packed kernel word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvOperands {
    input: SamdWord,
    kernel: SamdWord,
    taps: usize,
    in_lanes: usize,
}

impl ConvOperands {
    /// Packs `input` and `kernel` (both in lane order) at `stride`.
    pub fn new(input: &LaneArray, kernel: &LaneArray, stride: u32) -> Result<Self> {
        if input.is_empty() {
            return Err(SamdError::Empty("convolution input"));
        }
        if kernel.is_empty() {
            return Err(SamdError::Empty("convolution kernel"));
        }
        let bits = input.bits();
        validate_conv_format(bits, kernel.len(), stride)?;
        let f = LaneFormat::spaced(bits, Signedness::Signed, stride)?;
        if kernel.len() > input.len() {
            return Err(SamdError::ConvGeometry(format!(
                "{} taps exceed the {}-lane input",
                kernel.len(),
                input.len()
            )));
        }
        Ok(Self {
            input: crate::format::pack(input, f)?,
            kernel: crate::format::pack(kernel, f)?,
            taps: kernel.len(),
            in_lanes: input.len(),
        })
    }

    pub fn input(&self) -> SamdWord {
        self.input
    }

    pub fn kernel(&self) -> SamdWord {
        self.kernel
    }

    pub fn product(&self) -> ConvResult {
        let wide = signed_conv_word(self.input, self.kernel).expect("operands validated on construction");
        ConvResult {
            wide,
            taps: self.taps,
            in_lanes: self.in_lanes,
        }
    }
}

/// A word product with its lane classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvResult {
    wide: WideWord,
    taps: usize,
    in_lanes: usize,
}

impl ConvResult {
    pub fn wide(&self) -> WideWord {
        self.wide
    }

    /// Lanes holding all `K` products.
    pub fn complete_lanes(&self) -> std::ops::Range<usize> {
        self.taps - 1..self.in_lanes
    }

    /// Low-side lanes missing the products of earlier inputs.
    pub fn partial_lo(&self) -> std::ops::Range<usize> {
        0..self.taps - 1
    }

    /// High-side lanes missing the products of later inputs.
    pub fn partial_hi(&self) -> std::ops::Range<usize> {
        self.in_lanes..self.in_lanes + self.taps - 1
    }

    pub fn lane(&self, j: usize) -> i64 {
        self.wide.lane(j)
    }

    pub fn complete(&self) -> Vec<i64> {
        self.complete_lanes().map(|j| self.wide.lane(j)).collect()
    }
}

/// A contiguous run of kernel taps multiplied in one instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub first_tap: usize,
    pub len: usize,
}

/// Word geometry of a blocked convolution, independent of value headroom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvGeometry {
    stride: u32,
    taps: usize,
    in_lanes: usize,
    out_lanes: usize,
    advance: usize,
    chunks: Vec<Chunk>,
}

impl ConvGeometry {
    pub fn new(taps: usize, stride: u32) -> Result<Self> {
        if taps == 0 {
            return Err(SamdError::Empty("convolution kernel"));
        }
        if !(2..=WORD_BITS).contains(&stride) {
            return Err(SamdError::ConvGeometry(format!("stride {stride} outside 2..=64")));
        }
        let in_lanes = (WORD_BITS / stride) as usize;
        let out_lanes = (WIDE_BITS / stride) as usize;
        let (advance, chunk_len) = if taps <= in_lanes {
            (in_lanes - taps + 1, taps)
        } else {
            // taps split over several kernel words, each shifted into place
            let advance = in_lanes.min((out_lanes + 1).saturating_sub(taps));
            (advance, in_lanes)
        };
        if advance == 0 {
            return Err(SamdError::ConvGeometry(format!(
                "{taps} taps at stride {stride} leave no complete output lane in a 128-bit product"
            )));
        }
        let chunks = (0..taps)
            .step_by(chunk_len)
            .map(|first_tap| Chunk {
                first_tap,
                len: chunk_len.min(taps - first_tap),
            })
            .collect();
        Ok(Self {
            stride,
            taps,
            in_lanes,
            out_lanes,
            advance,
            chunks,
        })
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// `I`: lanes in one input word.
    pub fn in_lanes(&self) -> usize {
        self.in_lanes
    }

    /// `L`: lanes in one 128-bit product.
    pub fn out_lanes(&self) -> usize {
        self.out_lanes
    }

    /// `A`: input lanes per block, which is also complete outputs per block.
    pub fn advance(&self) -> usize {
        self.advance
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn blocks_for(&self, input_len: usize) -> usize {
        input_len.div_ceil(self.advance)
    }

    /// Lanes spanned by one block's product.
    pub fn span(&self) -> usize {
        self.advance + self.taps - 1
    }

    /// Whether a block product fits a 64-bit word.
    pub fn fits_u64(&self) -> bool {
        self.span() as u32 * self.stride <= WORD_BITS
    }
}

/// A validated convolution: geometry, headroom and masks for one
/// (bits, taps, stride, mode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvPlan {
    geometry: ConvGeometry,
    format: LaneFormat,
    mode: SpacerMode,
    in_sign: u64,
    out_msb: u128,
}

impl ConvPlan {
    pub fn new(bits: u32, taps: usize, stride: u32, mode: SpacerMode) -> Result<Self> {
        validate_conv_format(bits, taps, stride)?;
        let format = LaneFormat::spaced(bits, Signedness::Signed, stride)?;
        let geometry = ConvGeometry::new(taps, stride)?;
        Ok(Self {
            geometry,
            format,
            mode,
            in_sign: sign_mask(format),
            out_msb: fill(stride - 1, 1, stride, WIDE_BITS),
        })
    }

    /// Plan at the default stride `2 * (bits + 1)`.
    pub fn with_default_stride(bits: u32, taps: usize, mode: SpacerMode) -> Result<Self> {
        Self::new(bits, taps, 2 * (bits + 1), mode)
    }

    pub fn geometry(&self) -> &ConvGeometry {
        &self.geometry
    }

    pub fn format(&self) -> LaneFormat {
        self.format
    }

    pub fn mode(&self) -> SpacerMode {
        self.mode
    }

    pub fn bits(&self) -> u32 {
        self.format.bits()
    }

    pub fn taps(&self) -> usize {
        self.geometry.taps
    }

    pub fn stride(&self) -> u32 {
        self.geometry.stride
    }

    /// Sign bit of every input lane.
    pub fn in_sign_mask(&self) -> u64 {
        self.in_sign
    }

    /// MSB of every `stride`-bit lane of a 128-bit product.
    pub fn out_msb_mask(&self) -> u128 {
        self.out_msb
    }

    /// Packs up to `I` signed values, lane 0 first, with zero spacers.
    pub fn pack_block(&self, values: &[i32]) -> Result<u64> {
        pack_values(values, self.format)
    }

    /// Packs the kernel (tap `t` in lane `t`) as one word per chunk.
    pub fn pack_kernel(&self, kernel: &[i32]) -> Result<Vec<u64>> {
        if kernel.len() != self.taps() {
            return Err(SamdError::Shape(format!(
                "kernel has {} taps, plan expects {}",
                kernel.len(),
                self.taps()
            )));
        }
        self.geometry
            .chunks
            .iter()
            .map(|c| pack_values(&kernel[c.first_tap..c.first_tap + c.len], self.format))
            .collect()
    }

    #[inline]
    pub fn sign_extend(&self, word: u64) -> u64 {
        sign_extend_word(word, self.in_sign)
    }

    /// Adds the convolution of one packed input word with the packed kernel
    /// chunks into `acc`, lane-wise. Both operands are raw packed words.
    pub fn accumulate_block(&self, acc: u128, input: u64, kernel: &[u64]) -> u128 {
        assert_eq!(kernel.len(), self.geometry.chunks.len(), "one kernel word per chunk");
        let x = self.sign_extend(input);
        let steps = self.geometry.chunks.iter().zip(kernel);
        match self.mode {
            SpacerMode::Temporary => steps.fold(acc, |acc, (c, &kw)| {
                self.chunk_step::<u128, false>(acc, x, self.sign_extend(kw), c, &mut ())
            }),
            SpacerMode::Permanent => steps.fold(acc, |acc, (c, &kw)| {
                self.chunk_step::<u128, true>(acc, x, self.sign_extend(kw), c, &mut ())
            }),
        }
    }

    /// Accumulation from sign-extended operands; the hot path of every caller.
    #[inline(always)]
    pub(crate) fn accumulate_ext<W: LaneWord, const PERM: bool>(
        &self,
        mut acc: W,
        x: u64,
        k: &[u64],
        tally: &mut impl Tally,
    ) -> W {
        for (chunk, &kw) in self.geometry.chunks.iter().zip(k) {
            acc = self.chunk_step::<W, PERM>(acc, x, kw, chunk, tally);
        }
        acc
    }

    /// One multiply: fix up the product and add it, shifted to the chunk's
    /// first tap, into `acc`.
    #[inline(always)]
    fn chunk_step<W: LaneWord, const PERM: bool>(
        &self,
        acc: W,
        x: u64,
        kw: u64,
        chunk: &Chunk,
        tally: &mut impl Tally,
    ) -> W {
        let m = W::truncate(self.out_msb);
        let p = apply_fixup::<W, PERM>(W::signed_product(x, kw), m);
        tally.multiply();
        lane_add::<W, PERM>(acc, p << (chunk.first_tap as u32 * self.geometry.stride), m)
    }

    /// Lane-wise sum of two accumulators.
    pub fn merge(&self, a: u128, b: u128) -> u128 {
        match self.mode {
            SpacerMode::Temporary => lane_merge::<u128, false>(a, b, self.out_msb),
            SpacerMode::Permanent => lane_merge::<u128, true>(a, b, self.out_msb),
        }
    }

    #[inline(always)]
    pub(crate) fn merge_w<W: LaneWord, const PERM: bool>(&self, a: W, b: W) -> W {
        lane_merge::<W, PERM>(a, b, W::truncate(self.out_msb))
    }

    /// The partial lanes `A..A+K-1` of a block value, moved down to lane 0.
    #[inline(always)]
    pub fn carry_out<W: LaneWord>(&self, v: W) -> W {
        let g = &self.geometry;
        let carry_bits = (g.taps as u32 - 1) * g.stride;
        if carry_bits == 0 {
            return W::default();
        }
        let mask = W::truncate((1u128 << carry_bits) - 1);
        (v >> (g.advance as u32 * g.stride)) & mask
    }

    /// Lane `j` of an accumulator reduced to the lane type: the low `bits`, sign-extended.
    #[inline(always)]
    pub fn extract<W: LaneWord>(&self, v: W, j: usize) -> i32 {
        let raw = (v >> (j as u32 * self.geometry.stride)).low64();
        extend_field(raw, self.format.bits(), Signedness::Signed) as i32
    }

    /// Lane `j` as a full `stride`-bit two's complement number. Exact only in
    /// temporary mode.
    pub fn extract_exact<W: LaneWord>(&self, v: W, j: usize) -> i64 {
        let raw = (v >> (j as u32 * self.geometry.stride)).low64();
        extend_field(raw, self.geometry.stride, Signedness::Signed)
    }
}

/// Result of a long convolution over the valid region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvOutput {
    /// Each output reduced modulo `2^bits`.
    pub wrapped: LaneArray,
    /// Exact sums before reduction; only available in temporary mode.
    pub exact: Option<Vec<i64>>,
}

/// Valid-region convolution `out[j] = sum_t kernel[t] * input[j - t]` for
/// `j` in `K-1..n`, at the default stride.
pub fn conv1d_long(input: &LaneArray, kernel: &LaneArray) -> Result<ConvOutput> {
    let plan = ConvPlan::with_default_stride(kernel_bits(input, kernel)?, kernel.len(), SpacerMode::Temporary)?;
    conv1d_long_with(&plan, input, kernel, &mut ())
}

/// [`conv1d_long`] with multiply and addition counts.
pub fn conv1d_long_counted(plan: &ConvPlan, input: &LaneArray, kernel: &LaneArray) -> Result<(ConvOutput, OpCounts)> {
    let mut counts = OpCounts::default();
    let out = conv1d_long_with(plan, input, kernel, &mut counts)?;
    Ok((out, counts))
}

fn kernel_bits(input: &LaneArray, kernel: &LaneArray) -> Result<u32> {
    if input.bits() != kernel.bits() {
        return Err(SamdError::FormatMismatch(format!(
            "{}-bit input with a {}-bit kernel",
            input.bits(),
            kernel.bits()
        )));
    }
    Ok(input.bits())
}

pub fn conv1d_long_with(plan: &ConvPlan, input: &LaneArray, kernel: &LaneArray, tally: &mut impl Tally) -> Result<ConvOutput> {
    if input.is_empty() {
        return Err(SamdError::Empty("convolution input"));
    }
    if kernel.is_empty() {
        return Err(SamdError::Empty("convolution kernel"));
    }
    let bits = kernel_bits(input, kernel)?;
    for a in [input, kernel] {
        if a.signedness() != Signedness::Signed {
            return Err(SamdError::FormatMismatch("convolution operands must be signed".into()));
        }
    }
    if bits != plan.bits() {
        return Err(SamdError::FormatMismatch(format!(
            "{bits}-bit operands for a {}-bit plan",
            plan.bits()
        )));
    }
    let k: Vec<u64> = plan
        .pack_kernel(kernel.values())?
        .into_iter()
        .map(|w| plan.sign_extend(w))
        .collect();
    match plan.mode {
        SpacerMode::Temporary => Ok(run_long::<false>(plan, input.values(), &k, tally)),
        SpacerMode::Permanent => Ok(run_long::<true>(plan, input.values(), &k, tally)),
    }
}

fn run_long<const PERM: bool>(plan: &ConvPlan, input: &[i32], k: &[u64], tally: &mut impl Tally) -> ConvOutput {
    let g = &plan.geometry;
    let (n, taps, a) = (input.len(), g.taps, g.advance);
    let mut wrapped = Vec::with_capacity(n.saturating_sub(taps - 1));
    let mut exact = Vec::with_capacity(wrapped.capacity());
    let mut carry = 0u128;
    for blk in 0..g.blocks_for(n) {
        let start = blk * a;
        let lanes = &input[start..n.min(start + a)];
        let x = plan.sign_extend(plan.pack_block(lanes).expect("values range-checked by LaneArray"));
        let mut v = plan.accumulate_ext::<u128, PERM>(0, x, k, tally);
        // the first chunk lands in an empty word
        for _ in 1..g.chunks.len() {
            tally.addition();
        }
        if blk > 0 && taps > 1 {
            v = plan.merge_w::<u128, PERM>(v, carry);
            tally.addition();
        }
        for lane in 0..a {
            let j = start + lane;
            if j >= taps - 1 && j < n {
                wrapped.push(plan.extract(v, lane));
                if !PERM {
                    exact.push(plan.extract_exact(v, lane));
                }
            }
        }
        carry = plan.carry_out(v);
    }
    ConvOutput {
        wrapped: LaneArray::signed(wrapped, plan.bits()).expect("extraction yields lane-range values"),
        exact: (!PERM).then_some(exact),
    }
}

/// Multiplies and additions a blocked long convolution performs. Geometry
/// only: value headroom is not checked, so widths too narrow to run signed
/// data can still be counted.
pub fn count_scalar_ops(input_len: usize, taps: usize, format: LaneFormat) -> Result<OpCounts> {
    let g = ConvGeometry::new(taps, format.stride())?;
    let blocks = g.blocks_for(input_len) as u64;
    let chunks = g.chunks.len() as u64;
    let seams = if taps > 1 { blocks.saturating_sub(1) } else { 0 };
    Ok(OpCounts {
        multiplies: blocks * chunks,
        additions: blocks * (chunks - 1) + seams,
        ..OpCounts::default()
    })
}

/// Per-word accounting for an `I`-lane word and a `K`-tap kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordOpCounts {
    /// `(I - K) + 1` wide multiplies.
    pub samd_multiplies: u64,
    /// `I - K` additions.
    pub samd_additions: u64,
    /// `I * K` multiplies for the same word on native integers.
    pub native_multiplies: u64,
}

impl WordOpCounts {
    pub fn multiply_ratio(&self) -> f64 {
        self.native_multiplies as f64 / self.samd_multiplies as f64
    }
}

pub fn word_op_counts(in_lanes: usize, taps: usize) -> Result<WordOpCounts> {
    if taps == 0 || taps > in_lanes {
        return Err(SamdError::ConvGeometry(format!(
            "{taps} taps do not fit a {in_lanes}-lane word"
        )));
    }
    Ok(WordOpCounts {
        samd_multiplies: (in_lanes - taps + 1) as u64,
        samd_additions: (in_lanes - taps) as u64,
        native_multiplies: (in_lanes * taps) as u64,
    })
}

/// Full scalar convolution of plain integers, counting each multiply.
pub fn native_conv_counted(input: &[i64], kernel: &[i64], tally: &mut impl Tally) -> Vec<i64> {
    let mut out = vec![0i64; input.len() + kernel.len() - 1];
    for (i, &x) in input.iter().enumerate() {
        for (t, &k) in kernel.iter().enumerate() {
            out[i + t] += x * k;
            tally.multiply();
        }
    }
    out
}
