//! Speedups of packed cells over the native baseline, next to the counted
//! work of each packed configuration.

use std::collections::BTreeMap;
use std::fmt;

use samd::{word_op_counts, ConvGeometry, LayerConfig, SpacerMode};

use crate::{BenchError, BenchRow, Impl, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub layer: String,
    pub implementation: Impl,
    pub bits: u32,
    pub spacer: Option<SpacerMode>,
    pub baseline_ns: u64,
    pub cell_ns: u64,
    /// `baseline_ns / cell_ns`; exactly 1 for the baseline itself.
    pub speedup: f64,
    /// Native over packed multiplies for one word; `None` when the kernel
    /// does not fit one input word, or for the baseline.
    pub multiply_ratio: Option<f64>,
    /// Output lanes completed per wide multiply; 1 for the baseline's
    /// scalar multiply-accumulate.
    pub density: f64,
}

/// Whether speedup grows as lane width drops, for one layer and spacer mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    pub layer: String,
    pub spacer: SpacerMode,
    /// `(bits, speedup)` from widest to narrowest.
    pub points: Vec<(u32, f64)>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupReport {
    pub rows: Vec<SpeedupRow>,
    pub trends: Vec<Trend>,
}

/// Outputs per wide multiply for `taps` taps at `bits`-bit lanes and the
/// default conv stride.
pub fn packed_density(bits: u32, taps: usize) -> Result<f64> {
    let g = ConvGeometry::new(taps, 2 * (bits + 1))?;
    Ok(g.advance() as f64 / g.chunks().len() as f64)
}

fn multiply_ratio(bits: u32, taps: usize) -> Option<f64> {
    word_op_counts(64 / (2 * (bits + 1)) as usize, taps).ok().map(|c| c.multiply_ratio())
}

/// Pairs each row with the native row of the same layer and width.
pub fn speedup_report(rows: &[BenchRow], layers: &[LayerConfig]) -> Result<SpeedupReport> {
    let taps_of: BTreeMap<&str, usize> = layers.iter().map(|l| (l.name.as_str(), l.k)).collect();
    let mut baseline = BTreeMap::new();
    for r in rows.iter().filter(|r| r.implementation == Impl::Native8) {
        baseline.insert((r.layer.as_str(), r.bits), r.median_ns);
    }

    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let base = *baseline.get(&(r.layer.as_str(), r.bits)).ok_or_else(|| BenchError::MissingBaseline {
            layer: r.layer.clone(),
            bits: r.bits,
        })?;
        let taps = *taps_of
            .get(r.layer.as_str())
            .ok_or_else(|| BenchError::Options(format!("row names unknown layer {:?}", r.layer)))?;
        let (multiply_ratio, density) = match r.implementation {
            Impl::Native8 => (None, 1.0),
            Impl::Samd => (multiply_ratio(r.bits, taps), packed_density(r.bits, taps)?),
        };
        out.push(SpeedupRow {
            layer: r.layer.clone(),
            implementation: r.implementation,
            bits: r.bits,
            spacer: r.spacer.0,
            baseline_ns: base,
            cell_ns: r.median_ns,
            speedup: if r.implementation == Impl::Native8 {
                1.0
            } else {
                base as f64 / r.median_ns.max(1) as f64
            },
            multiply_ratio,
            density,
        });
    }

    let mut series: BTreeMap<(String, &'static str), (SpacerMode, Vec<(u32, f64)>)> = BTreeMap::new();
    for row in &out {
        if let Some(mode) = row.spacer {
            series
                .entry((row.layer.clone(), mode.label()))
                .or_insert_with(|| (mode, Vec::new()))
                .1
                .push((row.bits, row.speedup));
        }
    }
    let trends = series
        .into_iter()
        .map(|((layer, _), (spacer, mut points))| {
            points.sort_by(|a, b| b.0.cmp(&a.0));
            let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1);
            Trend { layer, spacer, points, monotone }
        })
        .collect();
    Ok(SpeedupReport { rows: out, trends })
}

impl fmt::Display for SpeedupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:<8} {:>4} {:>6} {:>14} {:>14} {:>8} {:>8} {:>8}",
            "layer", "impl", "bits", "spacer", "native_ns", "cell_ns", "speedup", "mul_x", "density"
        )?;
        for r in &self.rows {
            let spacer = r.spacer.map_or("-", SpacerMode::label);
            let ratio = r.multiply_ratio.map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
            writeln!(
                f,
                "{:<12} {:<8} {:>4} {:>6} {:>14} {:>14} {:>8.2} {:>8} {:>8.2}",
                r.layer,
                r.implementation.to_string(),
                r.bits,
                spacer,
                r.baseline_ns,
                r.cell_ns,
                r.speedup,
                ratio,
                r.density
            )?;
        }
        for t in &self.trends {
            let pts: Vec<String> = t.points.iter().map(|(b, s)| format!("{b}:{s:.2}")).collect();
            writeln!(
                f,
                "trend {} {}: {} ({})",
                t.layer,
                t.spacer,
                pts.join(" "),
                if t.monotone {
                    "speedup non-decreasing as width drops"
                } else {
                    "not monotone in width"
                }
            )?;
        }
        Ok(())
    }
}
