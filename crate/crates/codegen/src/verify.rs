//! Checking emitted routines against the library's generic path.
//!
//! Source text is compiled with `rustc` (or `$RUSTC`) for the Rust dialect and
//! `cc` (or `$CC`) for C, inside a harness that reads cases from stdin as hex
//! words and prints results. Routines already compiled into the caller can be
//! checked in process with [`verify_routine`].

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Command, Stdio};
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samd::ConvPlan;

use crate::{generate_conv_routine, CodegenError, Dialect, GenSpec, Result};

/// Input selection for verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cases {
    /// Random accumulators and full input words with random lane values.
    Random { count: usize, seed: u64 },
    /// Every combination of block input lanes and kernel taps, each paired
    /// with a pseudo-random accumulator. Only small spaces are allowed.
    Exhaustive,
}

/// Exhaustive spaces above this many cases are refused.
const EXHAUSTIVE_LIMIT_BITS: u32 = 24;

/// A failing input with both results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reproducer {
    pub routine: String,
    pub acc: u128,
    pub input: u64,
    pub kernel: Vec<u64>,
    pub expected: u128,
    pub got: u128,
}

impl fmt::Display for Reproducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(acc=0x{:032x}, input=0x{:016x}, kernel=[",
            self.routine, self.acc, self.input
        )?;
        for (i, k) in self.kernel.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "0x{k:016x}")?;
        }
        write!(f, "]) returned 0x{:032x}, expected 0x{:032x}", self.got, self.expected)
    }
}

struct Case {
    acc: u128,
    input: u64,
    kernel: Vec<u64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn case_stream(plan: &ConvPlan, cases: Cases) -> Result<Box<dyn Iterator<Item = Case> + Send>> {
    let plan = plan.clone();
    let g = plan.geometry().clone();
    let bits = plan.bits();
    let stride = plan.stride();
    match cases {
        Cases::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let half = 1i32 << (bits - 1);
            Ok(Box::new((0..count).map(move |_| {
                let acc = rng.gen::<u128>();
                let lanes: Vec<i32> = (0..g.in_lanes()).map(|_| rng.gen_range(-half..half)).collect();
                let taps: Vec<i32> = (0..g.taps()).map(|_| rng.gen_range(-half..half)).collect();
                Case {
                    acc,
                    input: plan.pack_block(&lanes).expect("in-range lanes"),
                    kernel: plan.pack_kernel(&taps).expect("in-range taps"),
                }
            })))
        }
        Cases::Exhaustive => {
            let digits = (g.advance() + g.taps()) as u32;
            let space_bits = digits * bits;
            if space_bits > EXHAUSTIVE_LIMIT_BITS {
                return Err(CodegenError::Harness(format!(
                    "exhaustive space of 2^{space_bits} cases for {}-bit lanes is too large",
                    bits
                )));
            }
            let field = (1u64 << bits) - 1;
            let place = move |mut v: u64, count: usize| {
                let mut w = 0u64;
                for lane in 0..count {
                    w |= (v & field) << (lane as u32 * stride);
                    v >>= bits;
                }
                (w, v)
            };
            Ok(Box::new((0..1u64 << space_bits).map(move |i| {
                let (input, rest) = place(i, g.advance());
                let mut rest = rest;
                let kernel = g
                    .chunks()
                    .iter()
                    .map(|c| {
                        let (w, r) = place(rest, c.len);
                        rest = r;
                        w
                    })
                    .collect();
                let acc = (splitmix(i) as u128) << 64 | splitmix(!i) as u128;
                Case { acc, input, kernel }
            })))
        }
    }
}

/// Compares an in-process routine with the library on `cases`.
pub fn verify_routine(
    spec: &GenSpec,
    routine: impl Fn(u128, u64, &[u64]) -> u128,
    cases: Cases,
) -> Result<usize> {
    let plan = spec.plan()?;
    let mut checked = 0;
    for case in case_stream(&plan, cases)? {
        let expected = plan.accumulate_block(case.acc, case.input, &case.kernel);
        let got = routine(case.acc, case.input, &case.kernel);
        if got != expected {
            return Err(mismatch(spec, case, expected, got));
        }
        checked += 1;
    }
    Ok(checked)
}

fn mismatch(spec: &GenSpec, case: Case, expected: u128, got: u128) -> CodegenError {
    CodegenError::Mismatch(Box::new(Reproducer {
        routine: spec.routine_name(),
        acc: case.acc,
        input: case.input,
        kernel: case.kernel,
        expected,
        got,
    }))
}

/// Generates, compiles and checks the routine for `spec`.
pub fn verify_generated(spec: &GenSpec, cases: Cases) -> Result<usize> {
    let text = generate_conv_routine(spec)?;
    verify_source(spec, &text, cases)
}

/// Compiles `source` (a routine in `spec`'s dialect) and checks it on `cases`.
pub fn verify_source(spec: &GenSpec, source: &str, cases: Cases) -> Result<usize> {
    let plan = spec.plan()?;
    let chunks = plan.geometry().chunks().len();
    let dir = tempfile::tempdir()?;
    let exe = dir.path().join("harness");
    let (compiler, args, file) = match spec.dialect {
        Dialect::Rust => {
            let file = dir.path().join("harness.rs");
            std::fs::write(&file, rust_harness(source, &spec.routine_name()))?;
            let rustc = std::env::var("RUSTC").unwrap_or_else(|_| "rustc".into());
            let args = vec!["--edition=2021", "-Copt-level=1", "-Adead_code"];
            (rustc, args, file)
        }
        Dialect::C => {
            let file = dir.path().join("harness.c");
            std::fs::write(&file, c_harness(source, &spec.routine_name(), chunks))?;
            let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
            (cc, vec!["-O1", "-std=gnu99"], file)
        }
    };
    let output = Command::new(&compiler)
        .args(&args)
        .arg("-o")
        .arg(&exe)
        .arg(&file)
        .output()
        .map_err(|e| CodegenError::Harness(format!("cannot run {compiler}: {e}")))?;
    if !output.status.success() {
        return Err(CodegenError::Compile {
            compiler,
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }

    let mut child = Command::new(&exe)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let stdin = child.stdin.take().expect("piped stdin");
    let feed = case_stream(&plan, cases)?;
    let writer = thread::spawn(move || -> std::io::Result<()> {
        let mut w = BufWriter::new(stdin);
        for case in feed {
            write!(w, "{:016x} {:016x} {:016x}", (case.acc >> 64) as u64, case.acc as u64, case.input)?;
            for k in &case.kernel {
                write!(w, " {k:016x}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    });

    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let mut lines = stdout.lines();
    let mut checked = 0;
    let mut failure = None;
    for case in case_stream(&plan, cases)? {
        let line = match lines.next() {
            Some(line) => line?,
            None => {
                failure = Some(CodegenError::Harness(format!(
                    "harness stopped after {checked} cases"
                )));
                break;
            }
        };
        let got = parse_result(&line)?;
        let expected = plan.accumulate_block(case.acc, case.input, &case.kernel);
        if got != expected {
            failure = Some(mismatch(spec, case, expected, got));
            break;
        }
        checked += 1;
    }
    drop(lines);
    let status = child.wait()?;
    // a broken pipe is expected when reading stopped early
    let written = writer.join().map_err(|_| CodegenError::Harness("stdin writer panicked".into()))?;
    if let Some(err) = failure {
        return Err(err);
    }
    written?;
    if !status.success() {
        return Err(CodegenError::Harness(format!("harness exited with {status}")));
    }
    Ok(checked)
}

fn parse_result(line: &str) -> Result<u128> {
    let bad = || CodegenError::Harness(format!("unreadable harness output {line:?}"));
    let mut parts = line.split_whitespace();
    let mut next = || {
        parts
            .next()
            .and_then(|t| u64::from_str_radix(t, 16).ok())
            .ok_or_else(bad)
    };
    let (hi, lo) = (next()?, next()?);
    Ok((hi as u128) << 64 | lo as u128)
}

fn rust_harness(routine: &str, name: &str) -> String {
    format!(
        r#"use std::io::{{BufRead, BufWriter, Write}};

{routine}
fn main() {{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for line in stdin.lock().lines() {{
        let line = line.expect("stdin");
        let w: Vec<u64> = line
            .split_whitespace()
            .map(|t| u64::from_str_radix(t, 16).expect("hex word"))
            .collect();
        let acc = (w[0] as u128) << 64 | w[1] as u128;
        let r = {name}(acc, w[2], &w[3..]);
        writeln!(out, "{{:016x}} {{:016x}}", (r >> 64) as u64, r as u64).expect("stdout");
    }}
}}
"#
    )
}

fn c_harness(routine: &str, name: &str, chunks: usize) -> String {
    format!(
        r#"#include <stdio.h>

{routine}
int main(void)
{{
    unsigned long long hi, lo, in, k;
    uint64_t kw[{chunks}];
    while (scanf("%llx %llx %llx", &hi, &lo, &in) == 3) {{
        for (int i = 0; i < {chunks}; i++) {{
            if (scanf("%llx", &k) != 1)
                return 2;
            kw[i] = k;
        }}
        samd_u128 r = {name}(((samd_u128)hi << 64) | lo, in, kw);
        printf("%016llx %016llx\n", (unsigned long long)(r >> 64), (unsigned long long)r);
    }}
    return 0;
}}
"#
    )
}
