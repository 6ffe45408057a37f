//! Specializing generator for packed convolution steps.
//!
//! For a fixed lane width, tap count, stride and spacer mode, every mask is a
//! constant and the kernel splits into a fixed number of multiplies. The
//! generator folds those constants into literals and unrolls the multiplies,
//! producing one straight-line routine
//!
//! ```text
//! fn(acc: u128, input: u64, kernel: &[u64]) -> u128
//! ```
//!
//! that adds the convolution of one packed input word with the packed kernel
//! words into `acc`. It computes exactly what [`samd::ConvPlan::accumulate_block`]
//! computes.

mod emit;
mod verify;

use std::fmt;
use std::str::FromStr;

use samd::{ConvPlan, SamdError, SpacerMode};
use thiserror::Error;

pub use emit::generate_conv_routine;
pub use verify::{verify_generated, verify_routine, verify_source, Cases, Reproducer};

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("invalid routine spec: {0}")]
    Spec(#[from] SamdError),
    #[error("{0}-bit words are not supported; routines take 64-bit input words")]
    WordBits(u32),
    #[error("unknown dialect {0:?}, expected rust or c")]
    Dialect(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{compiler} rejected the generated source:\n{stderr}")]
    Compile { compiler: String, stderr: String },
    #[error("verification harness failed: {0}")]
    Harness(String),
    #[error("generated routine disagrees with the library: {0}")]
    Mismatch(Box<Reproducer>),
}

pub type Result<T, E = CodegenError> = std::result::Result<T, E>;

/// Output language of the emitted routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    Rust,
    /// C99 with the `unsigned __int128` extension (GCC, Clang).
    C,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Rust => "rust",
            Dialect::C => "c",
        })
    }
}

impl FromStr for Dialect {
    type Err = CodegenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rust" | "rs" => Ok(Dialect::Rust),
            "c" => Ok(Dialect::C),
            _ => Err(CodegenError::Dialect(s.to_owned())),
        }
    }
}

/// Parameters of one generated routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GenSpec {
    pub bits: u32,
    pub taps: usize,
    pub word_bits: u32,
    pub mode: SpacerMode,
    pub stride: u32,
    pub dialect: Dialect,
}

impl GenSpec {
    /// Rust routine at the default stride `2 * (bits + 1)`.
    pub fn new(bits: u32, taps: usize, mode: SpacerMode) -> Self {
        Self {
            bits,
            taps,
            word_bits: 64,
            mode,
            stride: 2 * (bits + 1),
            dialect: Dialect::Rust,
        }
    }

    pub fn with_stride(self, stride: u32) -> Self {
        Self { stride, ..self }
    }

    pub fn with_dialect(self, dialect: Dialect) -> Self {
        Self { dialect, ..self }
    }

    /// The library plan this routine specializes. Fails for invalid specs.
    pub fn plan(&self) -> Result<ConvPlan> {
        if self.word_bits != 64 {
            return Err(CodegenError::WordBits(self.word_bits));
        }
        Ok(ConvPlan::new(self.bits, self.taps, self.stride, self.mode)?)
    }

    pub fn routine_name(&self) -> String {
        format!(
            "samd_conv_b{}_k{}_s{}_{}",
            self.bits, self.taps, self.stride, self.mode
        )
    }

    /// Every spec of the supported grid: widths 2..=8, 1, 3 and 5 taps, both
    /// spacer modes, default stride.
    pub fn grid(dialect: Dialect) -> Vec<GenSpec> {
        let mut specs = Vec::new();
        for bits in 2..=8 {
            for taps in [1, 3, 5] {
                for mode in [SpacerMode::Temporary, SpacerMode::Permanent] {
                    specs.push(GenSpec::new(bits, taps, mode).with_dialect(dialect));
                }
            }
        }
        specs
    }
}
