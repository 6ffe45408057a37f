use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use samd::SpacerMode;
use samd_bench::{read_layers, read_rows, run_sweep, speedup_report, write_rows, Result, SweepOptions};

/// Times packed convolution against native 8-bit arithmetic over a layer file.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// CSV with columns name,img_h,img_w,channels,kernels,k
    #[arg(long)]
    layers: PathBuf,
    /// Lane widths to sweep
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8")]
    bits: Vec<u32>,
    /// Spacer modes to sweep
    #[arg(long, value_delimiter = ',', default_value = "temp,perm")]
    spacer: Vec<SpacerMode>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Row output; rows go to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Workers for the packed path
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Skip timing and report on a previously written row file
    #[arg(long, conflicts_with = "out")]
    from_rows: Option<PathBuf>,
}

fn run(args: Args) -> Result<()> {
    let layers = read_layers(&args.layers)?;
    let rows = match &args.from_rows {
        Some(path) => read_rows(File::open(path)?)?,
        None => {
            let opts = SweepOptions {
                bits: args.bits,
                spacers: args.spacer,
                reps: args.reps,
                seed: args.seed,
                threads: args.threads.max(1),
                ..SweepOptions::default()
            };
            let rows = run_sweep(&layers, &opts)?;
            match &args.out {
                Some(path) => write_rows(&rows, File::create(path)?)?,
                None => write_rows(&rows, std::io::stdout().lock())?,
            }
            rows
        }
    };
    eprint!("{}", speedup_report(&rows, &layers)?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("samdbench: {e}");
            ExitCode::FAILURE
        }
    }
}
