//! Layer sweep: packed convolution at 2..8 bits against native 8-bit
//! arithmetic, with every timed cell gated on a reference checksum.

mod report;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samd::{
    direct_conv2d_reference, native8_conv2d, samd_conv2d_threads, LaneFormat, LayerConfig, QuantTensor, SamdError,
    Signedness, SpacerMode,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use report::{packed_density, speedup_report, SpeedupReport, SpeedupRow, Trend};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Samd(#[from] SamdError),
    #[error(
        "{layer}: {implementation} at {bits} bits ({spacer}) produced checksum {got:#018x}, reference is {expected:#018x}"
    )]
    Checksum {
        layer: String,
        implementation: Impl,
        bits: u32,
        spacer: Spacer,
        expected: u64,
        got: u64,
    },
    #[error("{layer}: no native8 baseline row at {bits} bits")]
    MissingBaseline { layer: String, bits: u32 },
    #[error("bad sweep options: {0}")]
    Options(String),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

/// Reads layer records `name,img_h,img_w,channels,kernels,k` with a header row.
pub fn read_layers(path: &Path) -> Result<Vec<LayerConfig>> {
    parse_layers(std::fs::File::open(path)?)
}

pub fn parse_layers(reader: impl std::io::Read) -> Result<Vec<LayerConfig>> {
    #[derive(Deserialize)]
    struct Record {
        name: String,
        img_h: usize,
        img_w: usize,
        channels: usize,
        kernels: usize,
        k: usize,
    }
    let mut layers = Vec::new();
    for record in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader).deserialize() {
        let r: Record = record?;
        let layer = LayerConfig {
            name: r.name,
            img_h: r.img_h,
            img_w: r.img_w,
            channels: r.channels,
            kernels: r.kernels,
            k: r.k,
        };
        layer.validate()?;
        layers.push(layer);
    }
    Ok(layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impl {
    Native8,
    Samd,
}

impl fmt::Display for Impl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Impl::Native8 => "native8",
            Impl::Samd => "samd",
        })
    }
}

/// Spacer column of a row; the native baseline has none and prints `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Spacer(pub Option<SpacerMode>);

impl fmt::Display for Spacer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(mode) => write!(f, "{mode}"),
            None => f.write_str("-"),
        }
    }
}

impl FromStr for Spacer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "-" {
            Ok(Spacer(None))
        } else {
            s.parse().map(|m| Spacer(Some(m)))
        }
    }
}

impl Serialize for Spacer {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Spacer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{v:#018x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        let digits = s.strip_prefix("0x").unwrap_or(&s);
        u64::from_str_radix(digits, 16).map_err(serde::de::Error::custom)
    }
}

/// One timed cell. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub layer: String,
    #[serde(rename = "impl")]
    pub implementation: Impl,
    pub bits: u32,
    pub spacer: Spacer,
    pub reps: usize,
    pub median_ns: u64,
    #[serde(with = "hex_u64")]
    pub checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOptions {
    pub bits: Vec<u32>,
    pub spacers: Vec<SpacerMode>,
    pub reps: usize,
    pub warmups: usize,
    pub seed: u64,
    /// Workers for the packed path; the native baseline is always single-threaded.
    pub threads: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            bits: (2..=8).collect(),
            spacers: vec![SpacerMode::Temporary, SpacerMode::Permanent],
            reps: 10,
            warmups: 2,
            seed: 1,
            threads: 1,
        }
    }
}

/// Uniform signed `bits`-bit image and kernel for one layer.
pub fn layer_data(layer: &LayerConfig, bits: u32, seed: u64) -> (QuantTensor, QuantTensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 1i32 << (bits - 1);
    let mut draw = |dims: Vec<usize>| {
        let n: usize = dims.iter().product();
        let v: Vec<i32> = (0..n).map(|_| rng.gen_range(-half..half)).collect();
        QuantTensor::from_values(dims, bits, Signedness::Signed, &v).expect("values drawn in range")
    };
    (draw(layer.image_dims()), draw(layer.kernel_dims()))
}

fn cell_seed(seed: u64, layer_index: usize, bits: u32) -> u64 {
    seed ^ ((layer_index as u64) << 8 | bits as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Median wall time of `reps` runs after `warmups` untimed runs.
fn time_median<T>(reps: usize, warmups: usize, mut run: impl FnMut() -> T) -> u64 {
    for _ in 0..warmups {
        std::hint::black_box(run());
    }
    let mut times: Vec<u64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(run());
            start.elapsed().as_nanos() as u64
        })
        .collect();
    median(&mut times)
}

fn median(v: &mut [u64]) -> u64 {
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2
    }
}

/// Runs every (layer, bits) with the native baseline and each spacer mode.
///
/// Each cell's output is checked against the reference before it is timed;
/// a mismatch aborts the sweep.
pub fn run_sweep(layers: &[LayerConfig], opts: &SweepOptions) -> Result<Vec<BenchRow>> {
    if opts.reps == 0 {
        return Err(BenchError::Options("at least one repetition is required".into()));
    }
    if let Some(&b) = opts.bits.iter().find(|b| !(2..=8).contains(*b)) {
        return Err(BenchError::Options(format!("bit width {b} outside 2..=8")));
    }
    let mut rows = Vec::new();
    for (li, layer) in layers.iter().enumerate() {
        for &bits in &opts.bits {
            let (image, kernel) = layer_data(layer, bits, cell_seed(opts.seed, li, bits));
            let expected = direct_conv2d_reference(&image, &kernel, layer, bits)?.checksum();
            let gate = |implementation, spacer: Spacer, got: u64| {
                if got == expected {
                    Ok(())
                } else {
                    Err(BenchError::Checksum {
                        layer: layer.name.clone(),
                        implementation,
                        bits,
                        spacer,
                        expected,
                        got,
                    })
                }
            };
            let mut push = |implementation, spacer, median_ns| {
                rows.push(BenchRow {
                    layer: layer.name.clone(),
                    implementation,
                    bits,
                    spacer,
                    reps: opts.reps,
                    median_ns,
                    checksum: expected,
                })
            };

            // the native result is 8-bit; reduced to `bits` it must match
            let native = || native8_conv2d(&image, &kernel, layer);
            gate(Impl::Native8, Spacer(None), native()?.wrap_to(bits)?.checksum())?;
            push(Impl::Native8, Spacer(None), time_median(opts.reps, opts.warmups, native));

            let format = LaneFormat::conv_spaced(bits, Signedness::Signed)?;
            for &mode in &opts.spacers {
                let packed = || samd_conv2d_threads(&image, &kernel, layer, format, mode, opts.threads);
                gate(Impl::Samd, Spacer(Some(mode)), packed()?.checksum())?;
                push(Impl::Samd, Spacer(Some(mode)), time_median(opts.reps, opts.warmups, packed));
            }
        }
    }
    Ok(rows)
}

/// [`run_sweep`] over a layer file.
pub fn run_sweep_file(layer_file: &Path, opts: &SweepOptions) -> Result<Vec<BenchRow>> {
    run_sweep(&read_layers(layer_file)?, opts)
}

pub fn write_rows(rows: &[BenchRow], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(reader: impl std::io::Read) -> Result<Vec<BenchRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(BenchError::from))
        .collect()
}
