//! Generated convolution routines, compiled in.
//!
//! `build.rs` emits one straight-line routine per lane width 2..=8, tap count
//! 1, 3 or 5 and spacer mode, at the default stride `2 * (bits + 1)`. Each
//! adds the convolution of one packed input word with the packed kernel words
//! into a 128-bit accumulator, exactly as `samd::ConvPlan::accumulate_block`.

use samd::SpacerMode;

pub type RoutineFn = fn(u128, u64, &[u64]) -> u128;

#[derive(Debug, Clone, Copy)]
pub struct Routine {
    pub bits: u32,
    pub taps: usize,
    pub stride: u32,
    pub mode: SpacerMode,
    pub name: &'static str,
    pub f: RoutineFn,
}

include!(concat!(env!("OUT_DIR"), "/routines.rs"));

/// The compiled routine for a spec of the grid, if there is one.
pub fn routine(bits: u32, taps: usize, mode: SpacerMode) -> Option<&'static Routine> {
    ROUTINES
        .iter()
        .find(|r| r.bits == bits && r.taps == taps && r.mode == mode)
}
