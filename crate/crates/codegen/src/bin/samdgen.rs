//! Writes one generated convolution routine to a file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use samd::SpacerMode;
use samd_codegen::{generate_conv_routine, Dialect, GenSpec};

#[derive(Parser)]
#[command(name = "samdgen", about = "Emit a specialized packed convolution routine")]
struct Args {
    /// Lane width in bits (2..=8).
    #[arg(long)]
    bits: u32,
    /// Kernel taps.
    #[arg(long)]
    taps: usize,
    /// Spacer mode: temp or perm.
    #[arg(long)]
    spacer: SpacerMode,
    /// Lane stride in bits; defaults to 2 * (bits + 1).
    #[arg(long)]
    stride: Option<u32>,
    /// Output language: rust or c.
    #[arg(long, default_value = "rust")]
    dialect: Dialect,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut spec = GenSpec::new(args.bits, args.taps, args.spacer).with_dialect(args.dialect);
    if let Some(stride) = args.stride {
        spec = spec.with_stride(stride);
    }
    let text = match generate_conv_routine(&spec) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("samdgen: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = std::fs::write(&args.out, text) {
        eprintln!("samdgen: cannot write {}: {e}", args.out.display());
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
