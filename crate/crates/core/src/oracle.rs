//! Brute-force reference semantics.
//!
//! Nothing here touches packed words: every function works on plain integers
//! so that it can serve as an independent check of the lane arithmetic.

use crate::format::Signedness;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrapOp {
    Add,
    Sub,
    Mul,
}

/// Reduces `x` modulo 2^bits and reinterprets it under `signedness`.
pub fn wrap_value(x: i64, bits: u32, signedness: Signedness) -> i64 {
    let modulus = 1i64 << bits;
    let r = x.rem_euclid(modulus);
    match signedness {
        Signedness::Unsigned => r,
        Signedness::Signed if r >= modulus / 2 => r - modulus,
        Signedness::Signed => r,
    }
}

/// `(x op y) mod 2^bits`, reinterpreted per `signedness`.
pub fn wrap_op(op: WrapOp, x: i64, y: i64, bits: u32, signedness: Signedness) -> i64 {
    let exact = match op {
        WrapOp::Add => x + y,
        WrapOp::Sub => x - y,
        WrapOp::Mul => x * y,
    };
    wrap_value(exact, bits, signedness)
}

/// Full linear convolution, `out[j] = sum_t kernel[t] * input[j - t]`.
pub fn conv_exact(input: &[i64], kernel: &[i64]) -> Vec<i64> {
    assert!(!input.is_empty() && !kernel.is_empty(), "conv_exact needs nonempty operands");
    let mut out = vec![0i64; input.len() + kernel.len() - 1];
    for (i, &x) in input.iter().enumerate() {
        for (t, &k) in kernel.iter().enumerate() {
            out[i + t] += x * k;
        }
    }
    out
}

/// Bit-at-a-time mask: bit `i` is set iff some `k` has
/// `start + k*stride <= i < start + k*stride + len`.
pub fn mask_by_bits(start: u32, len: u32, stride: u32, word_bits: u32) -> u128 {
    let mut mask = 0u128;
    for i in 0..word_bits {
        if i < start {
            continue;
        }
        if (i - start) % stride < len {
            mask |= 1u128 << i;
        }
    }
    mask
}

/// Smallest lane width that holds every possible sum of `taps` products of
/// two signed `bits`-bit values, found by enumerating the products.
pub fn min_signed_sum_width(bits: u32, taps: usize) -> u32 {
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    let (mut pmin, mut pmax) = (0i64, 0i64);
    for a in lo..=hi {
        for b in lo..=hi {
            pmin = pmin.min(a * b);
            pmax = pmax.max(a * b);
        }
    }
    let (smin, smax) = (pmin * taps as i64, pmax * taps as i64);
    (1..64)
        .find(|&w| {
            // the underflow fixup needs every lane strictly inside (-2^(w-1), 2^(w-1))
            let half = 1i64 << (w - 1);
            smin > -half && smax < half
        })
        .unwrap()
}
