//! One line per acceptance criterion. Runs without the libtest harness so
//! the criteria execute in order and the timing gate has the machine to itself.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samd::format::extend_field;
use samd::oracle::{conv_exact, wrap_op, wrap_value, WrapOp};
use samd::{
    conv1d_long, conv1d_long_counted, count_scalar_ops, direct_conv2d_reference, native_conv_counted,
    samd_add, samd_conv2d, samd_mul, samd_sub, signed_conv_word, signed_conv_word_with, vector_scale_wrap,
    word_op_counts, ConvOperands, ConvPlan, Fixup, LaneArray, LaneFormat, LayerConfig, OpCounts, QuantTensor,
    SamdWord, Signedness, SpacerMode,
};
use samd_bench::{packed_density, read_layers, run_sweep, speedup_report, Impl, SweepOptions};
use samd_codegen::{generate_conv_routine, verify_generated, verify_routine, Cases, Dialect, GenSpec};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const MODES: [SpacerMode; 2] = [SpacerMode::Temporary, SpacerMode::Permanent];
const SIGNS: [Signedness; 2] = [Signedness::Signed, Signedness::Unsigned];

fn layer_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("layers").join(name)
}

// ---- lane arithmetic ----

#[derive(Clone, Copy, Debug)]
enum LaneOp {
    Add,
    Sub,
    Mul,
    Scale,
}

const LANE_OPS: [LaneOp; 4] = [LaneOp::Add, LaneOp::Sub, LaneOp::Mul, LaneOp::Scale];

fn field(w: u64, lane: usize, bits: u32) -> u64 {
    w >> (lane as u32 * bits) & ((1 << bits) - 1)
}

/// Runs `op` on packed words and checks every lane, and the dead bits,
/// against the wrap oracle. For `Scale` the scalar is lane 0 of `b`.
fn check_lane_op(op: LaneOp, f: LaneFormat, a: u64, b: u64) -> Result<(), String> {
    let bits = f.bits();
    let s = f.signedness();
    let (wa, wb) = (SamdWord::new(a, f), SamdWord::new(b, f));
    let scalar = extend_field(field(b, 0, bits), bits, s);
    let got = match op {
        LaneOp::Add => samd_add(wa, wb),
        LaneOp::Sub => samd_sub(wa, wb),
        LaneOp::Mul => samd_mul(wa, wb),
        LaneOp::Scale => vector_scale_wrap(wa, scalar as i32),
    }
    .word();
    ensure!(got & !f.live_mask() == 0, "{op:?} b={bits}: dead bits set in {got:#x}");
    for lane in 0..f.lanes_per_word() {
        let x = extend_field(field(a, lane, bits), bits, s);
        let y = extend_field(field(b, lane, bits), bits, s);
        let expected = match op {
            LaneOp::Add => wrap_op(WrapOp::Add, x, y, bits, s),
            LaneOp::Sub => wrap_op(WrapOp::Sub, x, y, bits, s),
            LaneOp::Mul => wrap_op(WrapOp::Mul, x, y, bits, s),
            LaneOp::Scale => wrap_op(WrapOp::Mul, x, scalar, bits, s),
        };
        let g = extend_field(field(got, lane, bits), bits, s);
        ensure!(
            g == expected,
            "{op:?} b={bits} {s:?} lane {lane}: a={a:#x} b={b:#x} got {g}, expected {expected}"
        );
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut checked = 0u64;
    for bits in 2..=8u32 {
        for s in SIGNS {
            let f = LaneFormat::dense(bits, s).map_err(|e| e.to_string())?;
            let live = f.live_mask();
            if bits <= 4 {
                // every value pair of two adjacent lanes, at every lane position,
                // with the remaining lanes random
                let m = 1u64 << bits;
                for pos in 0..f.lanes_per_word() - 1 {
                    let shift = pos as u32 * bits;
                    let hole = !(((1u64 << (2 * bits)) - 1) << shift);
                    for v in 0..m.pow(4) {
                        let (a2, b2) = (v % (m * m), v / (m * m));
                        let a = (rng.gen::<u64>() & live & hole) | a2 << shift;
                        let b = (rng.gen::<u64>() & live & hole) | b2 << shift;
                        for op in LANE_OPS {
                            check_lane_op(op, f, a, b)?;
                        }
                        checked += 4;
                    }
                }
            }
            // full words: 10^6 per op for narrow lanes, 10^5 otherwise
            let samples = if bits <= 4 { 1_000_000 } else { 100_000 };
            for _ in 0..samples {
                let (a, b) = (rng.gen::<u64>() & live, rng.gen::<u64>() & live);
                for op in LANE_OPS {
                    check_lane_op(op, f, a, b)?;
                }
                checked += 4;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "{checked} op checks took {secs:.1} s");
    Ok(format!("{checked} op checks, widths 2..=8, signed and unsigned"))
}

// ---- signed convolution ----

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let mut lanes_checked = 0u64;
    for bits in 2..=5u32 {
        let stride = 2 * (bits + 1);
        let in_lanes = (64 / stride) as usize;
        let half = 1i32 << (bits - 1);
        for taps in [1usize, 3, 5] {
            for _ in 0..100_000 {
                let x: Vec<i32> = (0..in_lanes).map(|_| rng.gen_range(-half..half)).collect();
                let k: Vec<i32> = (0..taps).map(|_| rng.gen_range(-half..half)).collect();
                let ops = ConvOperands::new(
                    &LaneArray::signed(x.clone(), bits).unwrap(),
                    &LaneArray::signed(k.clone(), bits).unwrap(),
                    stride,
                )
                .map_err(|e| e.to_string())?;
                let r = ops.product();
                let exact = conv_exact(&to_i64(&x), &to_i64(&k));
                let complete = r.complete_lanes();
                ensure!(
                    r.complete() == exact[complete.clone()],
                    "b={bits} K={taps} x={x:?} k={k:?}: got {:?}, expected {:?}",
                    r.complete(),
                    &exact[complete]
                );
                lanes_checked += r.complete().len() as u64;
            }
        }
    }

    // a stored -1 below a positive lane: the naive fixup adds its borrow back twice
    let f = LaneFormat::spaced(4, Signedness::Signed, 10).unwrap();
    let x = SamdWord::new(samd::pack_values(&[-1, 0, 1], f).unwrap(), f);
    let k = SamdWord::new(samd::pack_values(&[1], f).unwrap(), f);
    let good = signed_conv_word(x, k).map_err(|e| e.to_string())?;
    let good: Vec<i64> = (0..3).map(|j| good.lane(j)).collect();
    ensure!(good == [-1, 0, 1], "underflow fixup gave {good:?} on the -1 case");
    let naive = signed_conv_word_with(x, k, Fixup::Naive).map_err(|e| e.to_string())?;
    let naive: Vec<i64> = (0..3).map(|j| naive.lane(j)).collect();
    ensure!(naive != [-1, 0, 1], "naive fixup unexpectedly survived the -1 case: {naive:?}");
    Ok(format!(
        "{lanes_checked} complete lanes exact for b=2..=5, K in {{1,3,5}}; -1 case fixed, naive fixup gives {naive:?}"
    ))
}

fn to_i64(v: &[i32]) -> Vec<i64> {
    v.iter().map(|&x| x as i64).collect()
}

fn criterion_3() -> Outcome {
    let (x, k) = ([2, 3, 7], [1, 0, -5]);
    let expected = conv_exact(&to_i64(&x), &to_i64(&k));
    ensure!(expected == [2, 3, -3, -15, -35], "oracle gave {expected:?}");
    let f = LaneFormat::conv_spaced(4, Signedness::Signed).unwrap();
    let wx = SamdWord::new(samd::pack_values(&x, f).unwrap(), f);
    let wk = SamdWord::new(samd::pack_values(&k, f).unwrap(), f);
    let w = signed_conv_word(wx, wk).map_err(|e| e.to_string())?;
    let got: Vec<i64> = (0..5).map(|j| w.lane(j)).collect();
    ensure!(got == expected, "signed_conv_word gave {got:?}");
    Ok(format!("conv([2,3,7],[1,0,-5]) = {got:?}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    let mut runs = 0;
    for bits in 2..=4u32 {
        let half = 1i32 << (bits - 1);
        for taps in [1usize, 3, 5] {
            let perm = ConvPlan::with_default_stride(bits, taps, SpacerMode::Permanent).unwrap();
            for n in 1..=256usize {
                let x: Vec<i32> = (0..n).map(|_| rng.gen_range(-half..half)).collect();
                let k: Vec<i32> = (0..taps).map(|_| rng.gen_range(-half..half)).collect();
                let xa = LaneArray::signed(x.clone(), bits).unwrap();
                let ka = LaneArray::signed(k.clone(), bits).unwrap();
                let exact = conv_exact(&to_i64(&x), &to_i64(&k));
                let valid: &[i64] = if n >= taps { &exact[taps - 1..n] } else { &[] };
                let wrapped: Vec<i32> =
                    valid.iter().map(|&v| wrap_value(v, bits, Signedness::Signed) as i32).collect();

                let temp = conv1d_long(&xa, &ka).map_err(|e| e.to_string())?;
                ensure!(temp.wrapped.values() == wrapped, "temp b={bits} K={taps} n={n}: wrapped mismatch");
                ensure!(temp.exact.as_deref() == Some(valid), "temp b={bits} K={taps} n={n}: exact mismatch");
                let (p, _) = conv1d_long_counted(&perm, &xa, &ka).map_err(|e| e.to_string())?;
                ensure!(p.wrapped.values() == wrapped, "perm b={bits} K={taps} n={n}: wrapped mismatch");
                runs += 2;
            }
        }
    }
    Ok(format!("{runs} long convolutions, lengths 1..=256, both spacer modes"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
    let mut cells = 0;
    for i in 0..60 {
        let k = if rng.gen_bool(0.5) { 3 } else { 5 };
        let cfg = LayerConfig {
            name: format!("rand{i}"),
            img_h: rng.gen_range(k + 1..=16),
            img_w: rng.gen_range(k + 1..=16),
            channels: rng.gen_range(1..=8),
            kernels: rng.gen_range(1..=4),
            k,
        };
        for bits in 2..=8u32 {
            let half = 1i32 << (bits - 1);
            let mut tensor = |dims: Vec<usize>| {
                let v: Vec<i32> = (0..dims.iter().product()).map(|_| rng.gen_range(-half..half)).collect();
                QuantTensor::from_values(dims, bits, Signedness::Signed, &v).unwrap()
            };
            let image = tensor(cfg.image_dims());
            let kernel = tensor(cfg.kernel_dims());
            let expected = direct_conv2d_reference(&image, &kernel, &cfg, bits).map_err(|e| e.to_string())?;
            let format = LaneFormat::conv_spaced(bits, Signedness::Signed).unwrap();
            for mode in MODES {
                let got = samd_conv2d(&image, &kernel, &cfg, format, mode).map_err(|e| e.to_string())?;
                ensure!(got == expected, "{cfg:?} b={bits} {mode}: outputs differ");
                cells += 1;
            }
        }
    }
    Ok(format!("60 random layers x widths 2..=8 x both modes = {cells} runs identical"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    let mut runs = 0;
    for bits in 2..=8u32 {
        let half = 1i32 << (bits - 1);
        for taps in [1usize, 3, 5] {
            for mode in MODES {
                let plan = ConvPlan::with_default_stride(bits, taps, mode).unwrap();
                for n in (1..=200usize).step_by(7) {
                    let x: Vec<i32> = (0..n).map(|_| rng.gen_range(-half..half)).collect();
                    let k: Vec<i32> = (0..taps).map(|_| rng.gen_range(-half..half)).collect();
                    let (_, counted) = conv1d_long_counted(
                        &plan,
                        &LaneArray::signed(x, bits).unwrap(),
                        &LaneArray::signed(k, bits).unwrap(),
                    )
                    .map_err(|e| e.to_string())?;
                    let predicted = count_scalar_ops(n, taps, plan.format()).map_err(|e| e.to_string())?;
                    ensure!(
                        (counted.multiplies, counted.additions) == (predicted.multiplies, predicted.additions),
                        "b={bits} K={taps} {mode} n={n}: counted {counted:?}, predicted {predicted:?}"
                    );
                    runs += 1;
                }
            }
        }
    }

    // 3-bit lanes at stride 6: ten lanes per word, three taps
    let f = LaneFormat::spaced(3, Signedness::Signed, 6).unwrap();
    let lanes = f.lanes_per_word();
    ensure!(lanes == 10, "stride 6 holds {lanes} lanes");
    let words = word_op_counts(lanes, 3).map_err(|e| e.to_string())?;
    let mut native = OpCounts::default();
    native_conv_counted(&[1; 10], &[1; 3], &mut native);
    ensure!(words.samd_multiplies == 8, "packed multiplies {}", words.samd_multiplies);
    ensure!(native.multiplies == 30, "scalar multiplies {}", native.multiplies);
    let ratio = native.multiplies as f64 / words.samd_multiplies as f64;
    ensure!(ratio == 3.75 && words.multiply_ratio() == 3.75, "ratio {ratio}");
    Ok(format!("{runs} instrumented runs match the formula; 30 / 8 = {ratio}"))
}

fn criterion_7() -> Outcome {
    let mut cases = 0;
    for spec in GenSpec::grid(Dialect::Rust) {
        let text = generate_conv_routine(&spec).map_err(|e| e.to_string())?;
        let steps = spec.plan().map_err(|e| e.to_string())?.geometry().chunks().len();
        let xors = text.matches("^= sign_").count();
        let want = if spec.mode == SpacerMode::Temporary { steps } else { 0 };
        ensure!(xors == want, "{}: {xors} fixup XORs, expected {want}", spec.routine_name());

        let seed = spec.bits as u64 * 100 + spec.taps as u64 * 10 + (spec.mode == SpacerMode::Permanent) as u64;
        cases += verify_generated(&spec, Cases::Random { count: 1000, seed }).map_err(|e| e.to_string())?;
        if spec.bits == 2 {
            // the compiled-in copy of the same source, in process
            let r = samd_kernels::routine(spec.bits, spec.taps, spec.mode)
                .ok_or_else(|| format!("{} missing from the kernel table", spec.routine_name()))?;
            cases += verify_routine(&spec, r.f, Cases::Exhaustive).map_err(|e| e.to_string())?;
        }
    }
    Ok(format!("42 routines compiled and verified, {cases} cases; fixup XOR counts as expected"))
}

fn criterion_8() -> Outcome {
    let smoke = read_layers(&layer_file("smoke.csv")).map_err(|e| e.to_string())?;
    let opts = SweepOptions::default();
    let rows = run_sweep(&smoke, &opts).map_err(|e| e.to_string())?;
    ensure!(rows.len() == 7 * 3, "smoke sweep produced {} rows", rows.len());
    let report = speedup_report(&rows, &smoke).map_err(|e| e.to_string())?;
    ensure!(
        report.rows.iter().all(|r| r.speedup.is_finite() && r.speedup > 0.0),
        "report has a non-finite speedup"
    );

    let layers = read_layers(&layer_file("vgg_b_small.csv")).map_err(|e| e.to_string())?;
    for l in &layers {
        let (d2, d8) = (packed_density(2, l.k), packed_density(8, l.k));
        let (d2, d8) = (d2.map_err(|e| e.to_string())?, d8.map_err(|e| e.to_string())?);
        ensure!(d2 > d8, "{}: density {d2} at 2 bits, {d8} at 8 bits", l.name);
        // complete lanes of one word product, (I - K) + 1
        let w2 = word_op_counts(64 / 6, l.k).map_err(|e| e.to_string())?.samd_multiplies;
        let w8 = word_op_counts(64 / 18, l.k).map_err(|e| e.to_string())?.samd_multiplies;
        ensure!(w2 > w8, "{}: {w2} complete lanes per word at 2 bits, {w8} at 8", l.name);
    }

    let opts = SweepOptions { bits: vec![2, 8], ..SweepOptions::default() };
    let rows = run_sweep(&layers, &opts).map_err(|e| e.to_string())?;
    let time = |layer: &str, bits: u32, mode: SpacerMode| {
        rows.iter()
            .find(|r| r.layer == layer && r.bits == bits && r.implementation == Impl::Samd && r.spacer.0 == Some(mode))
            .map(|r| r.median_ns)
            .expect("sweep covers every cell")
    };
    let mut worst: f64 = 0.0;
    for l in &layers {
        for mode in MODES {
            let (t2, t8) = (time(&l.name, 2, mode), time(&l.name, 8, mode));
            let ratio = t2 as f64 / t8 as f64;
            worst = worst.max(ratio);
            ensure!(
                ratio <= 1.1,
                "{} {mode}: 2-bit {t2} ns vs 8-bit {t8} ns exceeds the 10% margin",
                l.name
            );
        }
    }
    Ok(format!(
        "smoke sweep checksums match; density 2-bit > 8-bit; worst 2-bit/8-bit time ratio {worst:.2}"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("lane arithmetic matches the wrap oracle", criterion_1),
        ("signed word convolution is exact", criterion_2),
        ("worked polynomial example", criterion_3),
        ("long convolution stitching", criterion_4),
        ("layer convolution matches the direct loop nest", criterion_5),
        ("multiply counts", criterion_6),
        ("generated routines", criterion_7),
        ("benchmark harness", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
