//! Dense quantized tensors and their on-disk fixture format.
//!
//! Fixture layout, all integers little-endian:
//!
//! ```text
//! offset  size      field
//! 0       4         magic b"SQT1"
//! 4       1         bits (2..=8)
//! 5       1         signedness: 1 signed, 0 unsigned
//! 6       1         rank r
//! 7       1         reserved, 0
//! 8       4*r       dims, u32 each, outermost first
//! 8+4r    prod(dims) one byte per element, row-major: the value's low 8 bits
//! ```

use std::io::{Read, Write};

use crate::error::{Result, SamdError};
use crate::format::{extend_field, value_range, Signedness};

const MAGIC: &[u8; 4] = b"SQT1";

/// Row-major tensor of `bits`-bit integers. Each element is stored as the
/// low 8 bits of its two's complement value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantTensor {
    dims: Vec<usize>,
    bits: u32,
    signedness: Signedness,
    data: Vec<u8>,
}

impl QuantTensor {
    pub fn from_values(dims: Vec<usize>, bits: u32, signedness: Signedness, values: &[i32]) -> Result<Self> {
        if !(2..=8).contains(&bits) {
            return Err(SamdError::LaneWidth(bits));
        }
        let len: usize = dims.iter().product();
        if values.len() != len {
            return Err(SamdError::Shape(format!(
                "{} values for dims {dims:?} ({len} elements)",
                values.len()
            )));
        }
        let (lo, hi) = value_range(bits, signedness);
        let mut data = Vec::with_capacity(len);
        for &v in values {
            if (v as i64) < lo || (v as i64) > hi {
                return Err(SamdError::ValueRange {
                    value: v as i64,
                    bits,
                    signedness,
                });
            }
            data.push(v as u8);
        }
        Ok(Self {
            dims,
            bits,
            signedness,
            data,
        })
    }

    /// Wraps already-encoded element bytes; callers guarantee canonical patterns.
    pub(crate) fn from_raw(dims: Vec<usize>, bits: u32, signedness: Signedness, data: Vec<u8>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self {
            dims,
            bits,
            signedness,
            data,
        }
    }

    /// Each element reduced modulo `2^bits` and read back as signed.
    pub fn wrap_to(&self, bits: u32) -> Result<Self> {
        if !(2..=8).contains(&bits) {
            return Err(SamdError::LaneWidth(bits));
        }
        let data = self
            .data
            .iter()
            .map(|&b| extend_field(b as u64, bits, Signedness::Signed) as u8)
            .collect();
        Ok(Self::from_raw(self.dims.clone(), bits, Signedness::Signed, data))
    }

    pub fn zeros(dims: Vec<usize>, bits: u32, signedness: Signedness) -> Result<Self> {
        let len = dims.iter().product();
        Self::from_values(dims, bits, signedness, &vec![0; len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Raw element bytes.
    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn value(&self, flat: usize) -> i32 {
        extend_field(self.data[flat] as u64, self.bits, self.signedness) as i32
    }

    pub fn values(&self) -> Vec<i32> {
        (0..self.data.len()).map(|i| self.value(i)).collect()
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    pub fn get(&self, index: &[usize]) -> i32 {
        self.value(self.flat_index(index))
    }

    /// FNV-1a over the dims header and element bytes.
    pub fn checksum(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0100_0000_01b3;
        let header = self.dims.iter().flat_map(|&d| (d as u32).to_le_bytes());
        let bytes = [self.bits as u8].into_iter().chain(header).chain(self.data.iter().copied());
        bytes.fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[
            self.bits as u8,
            (self.signedness == Signedness::Signed) as u8,
            self.dims.len() as u8,
            0,
        ])?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        w.write_all(&self.data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + self.data.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| SamdError::TensorFile(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: String| SamdError::TensorFile(msg);
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(bad("missing SQT1 header".into()));
        }
        let (bits, sign, rank) = (bytes[4] as u32, bytes[5], bytes[6] as usize);
        let signedness = match sign {
            0 => Signedness::Unsigned,
            1 => Signedness::Signed,
            other => return Err(bad(format!("signedness byte {other}"))),
        };
        if bytes[7] != 0 {
            return Err(bad("reserved header byte is not zero".into()));
        }
        let body = 8 + 4 * rank;
        if bytes.len() < body {
            return Err(bad("truncated dims".into()));
        }
        let dims: Vec<usize> = bytes[8..body]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let len: usize = dims.iter().product();
        if bytes.len() - body != len {
            return Err(bad(format!(
                "{} element bytes for dims {dims:?}",
                bytes.len() - body
            )));
        }
        if !(2..=8).contains(&bits) {
            return Err(SamdError::LaneWidth(bits));
        }
        let data = bytes[body..].to_vec();
        let t = Self {
            dims,
            bits,
            signedness,
            data,
        };
        // a stored byte must be the canonical pattern of an in-range value
        for (i, &b) in t.data.iter().enumerate() {
            if t.value(i) as u8 != b {
                return Err(bad(format!("element {i} byte {b:#04x} is not a {bits}-bit {signedness} value")));
            }
        }
        Ok(t)
    }
}
