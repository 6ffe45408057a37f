//! Lowering a spec to a flat list of word operations, and rendering that
//! list in each dialect.

use std::fmt::Write;

use samd::{build_mask, SpacerMode};

use crate::{Dialect, GenSpec, Result};

/// Named constant; `wide` constants are 128-bit.
struct Const {
    name: &'static str,
    value: u128,
    wide: bool,
}

enum Op {
    Comment(String),
    /// `dst = src - ((src & IN_MSB) << 1)`
    SignExtend { dst: String, src: String },
    /// `dst = (i128)x * (i128)k`, both operands sign-extended from 64 bits.
    Product { dst: String, x: String, k: String },
    /// `dst = src & OUT_MSB`
    SignBits { dst: String, src: String },
    /// `target = target + sign`
    AddSign { target: String, sign: String },
    /// `target ^= sign`: the MSB restore of the underflow fixup.
    XorSign { target: String, sign: String },
    /// `dst = src << by`
    Shift { dst: String, src: String, by: u32 },
    /// Lane-wise add with MSB reconstruction.
    AccTemp { term: String },
    /// Spacer-style add: the accumulator's MSBs are cleared, the term's are kept.
    AccPerm { term: String },
}

struct Routine {
    name: String,
    consts: Vec<Const>,
    ops: Vec<Op>,
}

fn lower(spec: &GenSpec) -> Result<Routine> {
    let plan = spec.plan()?;
    let (b, s) = (spec.bits, spec.stride);
    let in_msb = build_mask(b - 1, 1, s, 64)?.value();
    let out_msb = build_mask(s - 1, 1, s, 128)?.value();
    let consts = vec![
        Const { name: "IN_MSB", value: in_msb, wide: false },
        Const { name: "OUT_MSB", value: out_msb, wide: true },
        Const { name: "OUT_LOW", value: !out_msb, wide: true },
    ];

    let mut ops = vec![Op::SignExtend { dst: "x".into(), src: "input".into() }];
    for (c, chunk) in plan.geometry().chunks().iter().enumerate() {
        let (k, p, sign) = (format!("k_{c}"), format!("p_{c}"), format!("sign_{c}"));
        ops.push(Op::Comment(format!(
            "taps {}..{}",
            chunk.first_tap,
            chunk.first_tap + chunk.len
        )));
        ops.push(Op::SignExtend { dst: k.clone(), src: format!("kernel[{c}]") });
        ops.push(Op::Product { dst: p.clone(), x: "x".into(), k });
        ops.push(Op::SignBits { dst: sign.clone(), src: p.clone() });
        ops.push(Op::AddSign { target: p.clone(), sign: sign.clone() });
        if spec.mode == SpacerMode::Temporary {
            ops.push(Op::XorSign { target: p.clone(), sign });
        }
        let by = chunk.first_tap as u32 * s;
        let term = if by == 0 {
            p
        } else {
            let t = format!("t_{c}");
            ops.push(Op::Shift { dst: t.clone(), src: p, by });
            t
        };
        ops.push(match spec.mode {
            SpacerMode::Temporary => Op::AccTemp { term },
            SpacerMode::Permanent => Op::AccPerm { term },
        });
    }
    Ok(Routine {
        name: spec.routine_name(),
        consts,
        ops,
    })
}

/// Emits the routine for `spec` in its dialect. Output is deterministic.
pub fn generate_conv_routine(spec: &GenSpec) -> Result<String> {
    let routine = lower(spec)?;
    let mut out = String::new();
    let header = format!(
        "{}-bit signed lanes at stride {}, {} taps, {} spacers",
        spec.bits, spec.stride, spec.taps, spec.mode
    );
    match spec.dialect {
        Dialect::Rust => render_rust(&routine, &header, &mut out),
        Dialect::C => render_c(&routine, &header, &mut out),
    }
    .expect("formatting into a String cannot fail");
    Ok(out)
}

fn render_rust(r: &Routine, header: &str, out: &mut String) -> std::fmt::Result {
    writeln!(out, "/// {header}.")?;
    writeln!(out, "#[inline]")?;
    writeln!(out, "pub fn {}(mut acc: u128, input: u64, kernel: &[u64]) -> u128 {{", r.name)?;
    for c in &r.consts {
        if c.wide {
            writeln!(out, "    const {}: u128 = 0x{:032X};", c.name, c.value)?;
        } else {
            writeln!(out, "    const {}: u64 = 0x{:016X};", c.name, c.value as u64)?;
        }
    }
    for op in &r.ops {
        match op {
            Op::Comment(text) => writeln!(out, "    // {text}")?,
            Op::SignExtend { dst, src } => {
                writeln!(out, "    let {dst} = {src}.wrapping_sub(({src} & IN_MSB) << 1);")?
            }
            Op::Product { dst, x, k } => writeln!(
                out,
                "    let mut {dst} = ({x} as i64 as i128).wrapping_mul({k} as i64 as i128) as u128;"
            )?,
            Op::SignBits { dst, src } => writeln!(out, "    let {dst} = {src} & OUT_MSB;")?,
            Op::AddSign { target, sign } => {
                writeln!(out, "    {target} = {target}.wrapping_add({sign});")?
            }
            Op::XorSign { target, sign } => writeln!(out, "    {target} ^= {sign};")?,
            Op::Shift { dst, src, by } => writeln!(out, "    let {dst} = {src} << {by};")?,
            Op::AccTemp { term } => writeln!(
                out,
                "    acc = (acc & OUT_LOW).wrapping_add({term} & OUT_LOW) ^ ((acc ^ {term}) & OUT_MSB);"
            )?,
            Op::AccPerm { term } => {
                writeln!(out, "    acc = (acc & OUT_LOW).wrapping_add({term});")?
            }
        }
    }
    writeln!(out, "    acc")?;
    writeln!(out, "}}")
}

fn c_wide_literal(v: u128) -> String {
    format!(
        "(((samd_u128)UINT64_C(0x{:016X})) << 64 | UINT64_C(0x{:016X}))",
        (v >> 64) as u64,
        v as u64
    )
}

fn render_c(r: &Routine, header: &str, out: &mut String) -> std::fmt::Result {
    writeln!(out, "#ifndef SAMD_U128_DEFINED")?;
    writeln!(out, "#define SAMD_U128_DEFINED")?;
    writeln!(out, "#include <stdint.h>")?;
    writeln!(out, "typedef unsigned __int128 samd_u128;")?;
    writeln!(out, "#endif")?;
    writeln!(out)?;
    writeln!(out, "/* {header}. */")?;
    writeln!(
        out,
        "static inline samd_u128 {}(samd_u128 acc, uint64_t input, const uint64_t *kernel)",
        r.name
    )?;
    writeln!(out, "{{")?;
    for c in &r.consts {
        if c.wide {
            writeln!(out, "    const samd_u128 {} = {};", c.name, c_wide_literal(c.value))?;
        } else {
            writeln!(out, "    const uint64_t {} = UINT64_C(0x{:016X});", c.name, c.value as u64)?;
        }
    }
    for op in &r.ops {
        match op {
            Op::Comment(text) => writeln!(out, "    /* {text} */")?,
            Op::SignExtend { dst, src } => {
                writeln!(out, "    const uint64_t {dst} = {src} - (({src} & IN_MSB) << 1);")?
            }
            Op::Product { dst, x, k } => writeln!(
                out,
                "    samd_u128 {dst} = (samd_u128)((__int128)(int64_t){x} * (__int128)(int64_t){k});"
            )?,
            Op::SignBits { dst, src } => {
                writeln!(out, "    const samd_u128 {dst} = {src} & OUT_MSB;")?
            }
            Op::AddSign { target, sign } => writeln!(out, "    {target} = {target} + {sign};")?,
            Op::XorSign { target, sign } => writeln!(out, "    {target} ^= {sign};")?,
            Op::Shift { dst, src, by } => {
                writeln!(out, "    const samd_u128 {dst} = {src} << {by};")?
            }
            Op::AccTemp { term } => writeln!(
                out,
                "    acc = ((acc & OUT_LOW) + ({term} & OUT_LOW)) ^ ((acc ^ {term}) & OUT_MSB);"
            )?,
            Op::AccPerm { term } => writeln!(out, "    acc = (acc & OUT_LOW) + {term};")?,
        }
    }
    writeln!(out, "    return acc;")?;
    writeln!(out, "}}")
}
