//! Lane-wise arithmetic on packed words.
//!
//! Dense-layout operations use temporary spacers: the MSB of each lane is
//! masked off so that carries land there, and the true MSB is rebuilt with
//! XOR afterwards. Permanent-spacer variants skip the rebuild.
//!
//! Format mismatches are programming errors and panic.

use crate::bitmask::fill;
use crate::format::{pack_values, LaneFormat, Layout, SamdWord, Signedness, WORD_BITS};

/// Operation tallies collected by instrumented entry points.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    /// Scalar (word-wide) multiplications.
    pub multiplies: u64,
    /// Lane-wise additions of whole words.
    pub additions: u64,
    /// Loop iterations of iterative algorithms.
    pub iterations: u64,
    /// Every individual word-wide and/or/xor/shift/add/sub/mul.
    pub word_ops: u64,
}

/// Sink for operation counts. `()` discards them.
pub trait Tally {
    fn multiply(&mut self) {}
    fn addition(&mut self) {}
    fn iteration(&mut self) {}
    fn word_ops(&mut self, _n: u64) {}
}

impl Tally for () {}

impl Tally for OpCounts {
    fn multiply(&mut self) {
        self.multiplies += 1;
    }
    fn addition(&mut self) {
        self.additions += 1;
    }
    fn iteration(&mut self) {
        self.iterations += 1;
    }
    fn word_ops(&mut self, n: u64) {
        self.word_ops += n;
    }
}

/// Precomputed masks for dense-layout arithmetic on one format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneOps {
    format: LaneFormat,
    msb: u64,
    low: u64,
    lsb: u64,
    live: u64,
    even: u64,
    odd: u64,
}

/// Word operations in one `LaneOps::add`.
const ADD_OPS: u64 = 6;
/// Word operations in one multiply iteration, including its add.
const MUL_ITER_OPS: u64 = 6 + ADD_OPS;

impl LaneOps {
    pub fn new(format: LaneFormat) -> Self {
        assert_eq!(format.layout(), Layout::Dense, "lane ops need a dense format");
        let b = format.bits();
        let live = format.live_mask();
        let msb = fill(b - 1, 1, b, WORD_BITS) as u64 & live;
        Self {
            format,
            msb,
            low: live & !msb,
            lsb: fill(0, 1, b, WORD_BITS) as u64 & live,
            live,
            even: fill(0, b, 2 * b, WORD_BITS) as u64 & live,
            odd: fill(b, b, 2 * b, WORD_BITS) as u64 & live,
        }
    }

    pub fn format(&self) -> LaneFormat {
        self.format
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let msb = (a ^ b) & self.msb;
        let sum = (a & self.low) + (b & self.low);
        msb ^ sum
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let msb = (a ^ b) & self.msb;
        // a's MSBs forced to one so no borrow leaves a lane
        let diff = ((a & self.live) | self.msb) - (b & self.low);
        msb ^ diff ^ self.msb
    }

    #[inline]
    pub fn mul(&self, a: u64, s: u64) -> u64 {
        self.mul_with(a, s, &mut ())
    }

    /// Shift-and-add multiply: one iteration per bit of the lane width.
    ///
    /// Iteration `j` selects the lanes of `s` whose bit `j` is set and adds
    /// `a << j`, masked to `[lane + j, lane + bits)`, into the running sum.
    pub fn mul_with<T: Tally>(&self, a: u64, s: u64, tally: &mut T) -> u64 {
        let bits = self.format.bits();
        let mut read = self.lsb;
        let mut a = a & self.live;
        let mut sum = 0;
        for j in 0..bits {
            let bit = s & read;
            // ones from each selected bit up to the top of its lane
            let write = (bit << (bits - j)).wrapping_sub(bit);
            let to_add = a & write;
            sum = self.add(sum, to_add);
            a <<= 1;
            read <<= 1;
            tally.iteration();
            tally.addition();
            tally.word_ops(MUL_ITER_OPS);
        }
        sum
    }

    /// Multiplies every lane by one `bits`-bit scalar pattern using odd/even
    /// splitting, which opens `bits` temporary spacer bits above each lane.
    #[inline]
    pub fn scale_wrap(&self, vec: u64, scalar: u64) -> u64 {
        let scalar = scalar & ((1u64 << self.format.bits()) - 1);
        let even = (vec & self.even).wrapping_mul(scalar) & self.even;
        let odd = (vec & self.odd).wrapping_mul(scalar) & self.odd;
        even | odd
    }
}

fn same_format(a: SamdWord, b: SamdWord) -> LaneFormat {
    assert_eq!(a.format(), b.format(), "operands have different lane formats");
    a.format()
}

/// Lane-wise `(a + b) mod 2^bits`; correct for signed and unsigned lanes.
pub fn samd_add(a: SamdWord, b: SamdWord) -> SamdWord {
    let f = same_format(a, b);
    SamdWord::new(LaneOps::new(f).add(a.word(), b.word()), f)
}

/// Lane-wise `(a - b) mod 2^bits`.
pub fn samd_sub(a: SamdWord, b: SamdWord) -> SamdWord {
    let f = same_format(a, b);
    SamdWord::new(LaneOps::new(f).sub(a.word(), b.word()), f)
}

/// Lane-wise `(a * s) mod 2^bits` in `bits` shift-and-add iterations.
pub fn samd_mul(a: SamdWord, s: SamdWord) -> SamdWord {
    let f = same_format(a, s);
    SamdWord::new(LaneOps::new(f).mul(a.word(), s.word()), f)
}

/// [`samd_mul`] with operation counting.
pub fn samd_mul_counted(a: SamdWord, s: SamdWord, counts: &mut OpCounts) -> SamdWord {
    let f = same_format(a, s);
    SamdWord::new(LaneOps::new(f).mul_with(a.word(), s.word(), counts), f)
}

/// Multiplies each lane by `scalar` (a value of the lane type), keeping the low `bits`.
pub fn vector_scale_wrap(vec: SamdWord, scalar: i32) -> SamdWord {
    let f = vec.format();
    let (lo, hi) = f.value_range();
    assert!(
        (lo..=hi).contains(&(scalar as i64)),
        "scalar {scalar} outside the {}-bit lane range",
        f.bits()
    );
    SamdWord::new(LaneOps::new(f).scale_wrap(vec.word(), scalar as u64), f)
}

/// Every lane set to `value`.
pub fn broadcast(value: i32, format: LaneFormat) -> SamdWord {
    let lanes = vec![value; format.lanes_per_word()];
    let word = pack_values(&lanes, format).expect("broadcast value out of lane range");
    SamdWord::new(word, format)
}

/// Unsigned add with one permanent spacer bit above each value.
///
/// The spacers of both inputs are cleared first, so each value lane receives
/// `(a + b) mod 2^bits` and the carry lands in its spacer. Spacer content of
/// the result is not meaningful.
pub fn add_permanent_spacer(a: SamdWord, b: SamdWord) -> SamdWord {
    let f = same_format(a, b);
    assert_eq!(f.layout(), Layout::PermSpacer, "permanent-spacer add on a {:?} word", f.layout());
    let keep = f.value_mask();
    SamdWord::new((a.word() & keep) + (b.word() & keep), f)
}

/// Scales unsigned `bits`-bit lanes that sit at stride `2 * bits` by an
/// unsigned scalar with a single multiply. Each lane of the result holds the
/// full `2 * bits`-bit product: low half in the value bits, high half in the
/// spacers above it.
pub fn scale_permanent_spacers(vec: SamdWord, scalar: u32) -> SamdWord {
    let f = vec.format();
    let b = f.bits();
    assert_eq!(
        f.layout(),
        Layout::Spaced { stride: 2 * b },
        "permanent-spacer scale needs {b} spacer bits per lane"
    );
    assert_eq!(f.signedness(), Signedness::Unsigned, "permanent-spacer scale is unsigned");
    assert!(scalar < (1 << b), "scalar {scalar} wider than {b} bits");
    let vec_clear = vec.word() & f.value_mask();
    SamdWord::new(vec_clear.wrapping_mul(scalar as u64), f)
}

/// Extends each signed lane's sign through the spacer bits above it by
/// subtracting the sign bit one place up.
///
/// The borrow runs through the spacers and decrements the next lane to the
/// left by one; the convolution fixup undoes exactly that. Read as an
/// integer, the result equals `sum(v_i * 2^(i*stride))`.
pub fn sign_extend_for_mul(vec: SamdWord) -> SamdWord {
    let f = vec.format();
    assert!(
        matches!(f.layout(), Layout::Spaced { .. }),
        "sign extension needs spacer bits above each lane"
    );
    assert_eq!(f.signedness(), Signedness::Signed, "sign extension of unsigned lanes");
    SamdWord::new(sign_extend_word(vec.word(), sign_mask(f)), f)
}

/// The sign bit of each lane of a spaced format.
pub(crate) fn sign_mask(f: LaneFormat) -> u64 {
    fill(f.bits() - 1, 1, f.stride(), WORD_BITS) as u64 & f.live_mask()
}

#[inline]
pub(crate) fn sign_extend_word(word: u64, sign_mask: u64) -> u64 {
    word.wrapping_sub((word & sign_mask) << 1)
}
