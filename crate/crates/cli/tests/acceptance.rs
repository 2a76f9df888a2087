//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Functional claims are exact; modeled performance figures are checked
//! against their reference values at the stated tolerances. Run with
//! `cargo test -p dpusim-cli --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use dpusim::bench::{
    run_arith_case, run_bsdp_case, run_gemv_estimate, run_gemv_functional_check, summarize_transfer,
};
use dpusim::bsdp::{bsdp_dot, transpose_to_bitplanes};
use dpusim::config::SimConfig;
use dpusim::cycles::throughput_mops;
use dpusim::datagen;
use dpusim::gemv::{GemvDType, Scenario};
use dpusim::isa::{Opcode, Signedness};
use dpusim::kernels::{
    dim_mul_int32, mul_int8_blocked, mul_int8_native, mulsi3, ArithOp, BlockWidth, DType, Unroll,
    Variant,
};
use dpusim::transfer::{policy_throughput, Direction, PolicyKind};
use rand::Rng;

const SEED: u64 = 42;

fn cfg() -> SimConfig {
    SimConfig::default()
}

/// |got/target - 1| <= tol
fn within(got: f64, target: f64, tol: f64) -> bool {
    (got / target - 1.0).abs() <= tol
}

fn assert_within(name: &str, got: f64, target: f64, tol: f64) {
    assert!(
        within(got, target, tol),
        "{name}: got {got:.4}, want {target} within {:.0}%",
        tol * 100.0
    );
}

fn edge_words() -> Vec<u32> {
    [0i32, 1, -1, 127, -127, 128, -128, i32::MIN, i32::MAX]
        .into_iter()
        .map(|v| v as u32)
        .collect()
}

#[test]
fn criterion_01_multiplication_correctness() {
    let mut rng = datagen::rng(SEED);
    // Random pairs: a million through each multiply kernel.
    for _ in 0..1_000_000 {
        let a: u32 = rng.gen();
        let b: u32 = rng.gen();
        let expect = a.wrapping_mul(b);
        assert_eq!(mulsi3(a, b).outputs[0], expect);
        assert_eq!(dim_mul_int32(a, b).outputs[0], expect);
    }
    for _ in 0..1_000_000 {
        let a: i8 = rng.gen();
        let b: i8 = rng.gen();
        assert_eq!(mul_int8_native(a, b).outputs[0] as i32, a as i32 * b as i32);
    }
    for _ in 0..125_000 {
        let block: u64 = rng.gen();
        let scalar: i8 = rng.gen();
        for width in [BlockWidth::X4, BlockWidth::X8] {
            let r = mul_int8_blocked(block, scalar, width);
            for (i, &src) in block.to_le_bytes().iter().enumerate() {
                let expect = (src as i8).wrapping_mul(scalar) as u8;
                assert_eq!((r.outputs[i / 4] >> (8 * (i % 4))) as u8, expect);
            }
        }
    }
    // Edge operands.
    for &a in &edge_words() {
        for &b in &edge_words() {
            let expect = a.wrapping_mul(b);
            assert_eq!(mulsi3(a, b).outputs[0], expect, "mulsi3({a:#x},{b:#x})");
            assert_eq!(dim_mul_int32(a, b).outputs[0], expect, "dim({a:#x},{b:#x})");
            let block = u64::from_le_bytes([a as u8; 8]);
            let r = mul_int8_blocked(block, b as u8 as i8, BlockWidth::X8);
            let expect_byte = (a as u8 as i8).wrapping_mul(b as u8 as i8) as u8;
            assert!(r
                .outputs
                .iter()
                .all(|w| w.to_le_bytes() == [expect_byte; 4]));
        }
    }
    // Exhaustive single-instruction multiply.
    for a in -128..=127i32 {
        for b in -128..=127i32 {
            assert_eq!(mul_int8_native(a as i8, b as i8).outputs[0] as i32, a * b);
        }
    }
    println!("criterion 01 (multiplication correctness, exact): PASS");
}

#[test]
fn criterion_02_step_and_cycle_bounds() {
    let mut rng = datagen::rng(SEED + 1);
    let mut worst_steps = 0;
    let mut worst_dim = 0;
    for _ in 0..200_000 {
        let a: u32 = rng.gen();
        let b: u32 = rng.gen();
        worst_steps = worst_steps.max(mulsi3(a, b).trace.count_of(Opcode::MulStep));
        worst_dim = worst_dim.max(dim_mul_int32(a, b).trace.total_instructions());
    }
    for &a in &edge_words() {
        for &b in &edge_words() {
            worst_steps = worst_steps.max(mulsi3(a, b).trace.count_of(Opcode::MulStep));
            worst_dim = worst_dim.max(dim_mul_int32(a, b).trace.total_instructions());
        }
    }
    assert!(worst_steps <= 32, "mulsi3 used {worst_steps} MUL_STEPs");
    assert_eq!(worst_steps, 32); // full-width operands do reach the bound
    assert!(
        worst_dim <= 26,
        "decomposed multiply used {worst_dim} slots"
    );
    assert_eq!(worst_dim, 26); // a negative multiplier hits it exactly

    // INT8 multiplication feeds the routine zero-extended byte operands;
    // every pair in [-128, 127]^2 resolves within nine steps.
    let mut worst_int8 = 0;
    for a in -128..=127i32 {
        for b in -128..=127i32 {
            let r = mulsi3(a as i8 as u8 as u32, b as i8 as u8 as u32);
            worst_int8 = worst_int8.max(r.trace.count_of(Opcode::MulStep));
            assert_eq!(r.outputs[0] as u8, (a as i8).wrapping_mul(b as i8) as u8);
        }
    }
    assert!(
        worst_int8 <= 9,
        "INT8-range operands used {worst_int8} MUL_STEPs"
    );
    println!(
        "criterion 02 (step/cycle bounds, exact): PASS (mulsi3 max {worst_steps}, int8 max {worst_int8}, dim max {worst_dim})"
    );
}

#[test]
fn criterion_03_bsdp_correctness() {
    let naive = |a: &[i8], b: &[i8]| {
        a.iter().zip(b).fold(0u32, |acc, (&x, &y)| {
            acc.wrapping_add((x as i32).wrapping_mul(y as i32) as u32)
        })
    };
    // 10^4 random vectors: 1250 per (length, signedness) pair.
    let mut seed = SEED + 2;
    for signedness in [Signedness::Unsigned, Signedness::Signed] {
        for len in [32usize, 64, 1024, 8192] {
            for _ in 0..1250 {
                let a = datagen::nibble_buffer(seed, len, signedness);
                let b = datagen::nibble_buffer(seed + 1, len, signedness);
                seed += 2;
                let ap = transpose_to_bitplanes(&a, signedness).unwrap();
                let bp = transpose_to_bitplanes(&b, signedness).unwrap();
                assert_eq!(
                    bsdp_dot(&ap, &bp).unwrap().outputs[0],
                    naive(&a, &b),
                    "{signedness:?} len {len}"
                );
            }
        }
    }
    // Exhaustive pairs of constant single-block vectors.
    for signedness in [Signedness::Unsigned, Signedness::Signed] {
        let range = match signedness {
            Signedness::Unsigned => 0i32..=15,
            Signedness::Signed => -8i32..=7,
        };
        for x in range.clone() {
            for y in range.clone() {
                let a = transpose_to_bitplanes(&[x as i8; 32], signedness).unwrap();
                let b = transpose_to_bitplanes(&[y as i8; 32], signedness).unwrap();
                assert_eq!(bsdp_dot(&a, &b).unwrap().outputs[0] as i32, 32 * x * y);
            }
        }
    }
    println!("criterion 03 (bit-serial dot product correctness, exact): PASS");
}

#[test]
fn criterion_04_single_dpu_throughput_calibration() {
    let cfg = cfg();
    let case = |d, o, v, u| run_arith_case(d, o, v, u, SEED, &cfg).unwrap();

    let i8_add = case(DType::Int8, ArithOp::Add, Variant::Baseline, Unroll::One);
    let i32_add = case(DType::Int32, ArithOp::Add, Variant::Baseline, Unroll::One);
    assert!(i8_add.oracle_ok && i32_add.oracle_ok);
    assert_within("INT8 ADD", i8_add.mops_at_saturation, 80.0, 0.02);
    assert_within("INT32 ADD", i32_add.mops_at_saturation, 67.0, 0.02);
    // Saturation holds from 11 tasklets up.
    for t in 11..=16 {
        assert_within(
            "INT8 ADD at 11+",
            i8_add.mops_by_tasklets[t - 1],
            80.0,
            0.02,
        );
    }

    let i8_full = case(DType::Int8, ArithOp::Add, Variant::Baseline, Unroll::Auto);
    let i32_full = case(DType::Int32, ArithOp::Add, Variant::Baseline, Unroll::Auto);
    assert_within("unrolled INT8 ADD", i8_full.mops_at_saturation, 133.3, 0.02);
    assert_within(
        "unrolled INT32 ADD",
        i32_full.mops_at_saturation,
        133.3,
        0.02,
    );

    // The native-instruction multiply curve is the addition curve, exactly,
    // at every tasklet count and unroll factor.
    for unroll in [Unroll::One, Unroll::X64, Unroll::X128, Unroll::Auto] {
        let add = case(DType::Int8, ArithOp::Add, Variant::Baseline, unroll);
        let ni = case(DType::Int8, ArithOp::Mul, Variant::Ni, unroll);
        assert_eq!(add.cycles_per_element, ni.cycles_per_element);
        assert_eq!(add.mops_by_tasklets, ni.mops_by_tasklets);
    }
    println!(
        "criterion 04 (throughput calibration +-2%): PASS (INT8 ADD {:.2}, INT32 ADD {:.2}, unrolled {:.2})",
        i8_add.mops_at_saturation, i32_add.mops_at_saturation, i8_full.mops_at_saturation
    );
}

#[test]
fn criterion_05_speedup_reproduction() {
    let cfg = cfg();
    let case = |d, o, v, u| run_arith_case(d, o, v, u, SEED, &cfg).unwrap();
    let sat = |c: &dpusim::bench::ArithCase| c.mops_at_saturation;

    let i8_base = case(DType::Int8, ArithOp::Mul, Variant::Baseline, Unroll::One);
    let nix8 = case(DType::Int8, ArithOp::Mul, Variant::NiX8, Unroll::One);
    let nix8_ratio = sat(&nix8) / sat(&i8_base);
    assert_within("NIx8 vs baseline INT8 MUL", nix8_ratio, 4.9, 0.20);

    let i32_base = case(DType::Int32, ArithOp::Mul, Variant::Baseline, Unroll::One);
    let dim = case(DType::Int32, ArithOp::Mul, Variant::Dim, Unroll::One);
    let dim_ratio = sat(&dim) / sat(&i32_base);
    assert_within("decomposed vs baseline INT32 MUL", dim_ratio, 1.16, 0.20);

    let gain = |d, o, v| sat(&case(d, o, v, Unroll::Auto)) / sat(&case(d, o, v, Unroll::One));
    assert_within(
        "INT32 ADD unroll gain",
        gain(DType::Int32, ArithOp::Add, Variant::Baseline),
        2.0,
        0.20,
    );
    assert_within(
        "INT8 ADD unroll gain",
        gain(DType::Int8, ArithOp::Add, Variant::Baseline),
        1.67,
        0.20,
    );
    assert_within(
        "INT8 MUL NI unroll gain",
        gain(DType::Int8, ArithOp::Mul, Variant::Ni),
        1.67,
        0.20,
    );
    assert_within(
        "NIx4 unroll gain",
        gain(DType::Int8, ArithOp::Mul, Variant::NiX4),
        1.30,
        0.20,
    );
    assert_within(
        "NIx8 unroll gain",
        gain(DType::Int8, ArithOp::Mul, Variant::NiX8),
        1.16,
        0.20,
    );
    println!("criterion 05 (speedups +-20%): PASS (NIx8 {nix8_ratio:.2}x, DIM {dim_ratio:.2}x)");
}

#[test]
fn criterion_06_bsdp_speedup() {
    let cfg = cfg();
    for signedness in [Signedness::Unsigned, Signedness::Signed] {
        let case = run_bsdp_case(signedness, SEED, &cfg).unwrap();
        assert!(case.dot_ok);
        assert_within(
            "bit-serial vs native baseline",
            case.speedup_vs_baseline,
            2.7,
            0.20,
        );
        assert_within(
            "bit-serial vs native optimized",
            case.speedup_vs_optimized,
            1.22,
            0.20,
        );
        if signedness == Signedness::Signed {
            println!(
                "criterion 06 (bit-serial speedups +-20%): PASS ({:.2}x vs baseline, {:.2}x vs optimized)",
                case.speedup_vs_baseline, case.speedup_vs_optimized
            );
        }
    }
}

#[test]
fn criterion_07_tasklet_scaling() {
    let cfg = cfg();
    // Model property at a representative per-element cost.
    let mops: Vec<f64> = (1..=16)
        .map(|t| throughput_mops(5.0, t, &cfg.pipeline).unwrap().mops)
        .collect();
    for t in 1..10 {
        assert!(
            mops[t] > mops[t - 1],
            "not increasing at {} tasklets",
            t + 1
        );
    }
    for t in 11..=16 {
        assert_eq!(mops[t - 1], mops[10], "plateau broken at {t} tasklets");
    }
    // And on a measured benchmark curve.
    let case = run_arith_case(
        DType::Int8,
        ArithOp::Add,
        Variant::Baseline,
        Unroll::One,
        SEED,
        &cfg,
    )
    .unwrap();
    for t in 1..10 {
        assert!(case.mops_by_tasklets[t] > case.mops_by_tasklets[t - 1]);
    }
    for t in 11..=16 {
        assert_eq!(case.mops_by_tasklets[t - 1], case.mops_by_tasklets[10]);
    }
    println!("criterion 07 (tasklet scaling, exact): PASS");
}

#[test]
fn criterion_08_transfer_model_ratios() {
    let cfg = cfg();
    let s = summarize_transfer(&cfg).unwrap();
    assert_within("write peak ratio 2-10", s.write_peak_ratio_2_10, 2.9, 0.20);
    assert_within("write avg ratio 2-10", s.write_avg_ratio_2_10, 2.4, 0.20);
    assert_within("read peak ratio 2-10", s.read_peak_ratio_2_10, 2.3, 0.20);
    assert_within("read avg ratio 2-10", s.read_avg_ratio_2_10, 1.8, 0.20);
    assert_within("write ratio at 40", s.write_ratio_at_40, 1.15, 0.20);
    assert_within("read ratio at 40", s.read_ratio_at_40, 1.10, 0.20);

    // Exact plateau: balanced writes are flat from four ranks.
    let bal_w = |n| {
        policy_throughput(
            n,
            PolicyKind::NumaChannelBalanced,
            Direction::HostToPim,
            &cfg.transfer,
            &cfg.topology,
        )
        .unwrap()
    };
    assert!(bal_w(2) < bal_w(4));
    assert!(bal_w(3) < bal_w(4));
    for n in 5..=40 {
        assert_eq!(bal_w(n), bal_w(4), "write plateau broken at {n} ranks");
    }

    // Exact ordering: writes beat reads at every configuration.
    for kind in [
        PolicyKind::BaselineSequential,
        PolicyKind::NumaChannelBalanced,
    ] {
        for n in 2..=40 {
            let w = policy_throughput(n, kind, Direction::HostToPim, &cfg.transfer, &cfg.topology)
                .unwrap();
            let r = policy_throughput(n, kind, Direction::PimToHost, &cfg.transfer, &cfg.topology)
                .unwrap();
            assert!(w > r, "{kind:?} at {n} ranks");
        }
    }
    println!(
        "criterion 08 (transfer ratios +-20%, plateau and ordering exact): PASS (write {:.2}x/{:.2}x, read {:.2}x/{:.2}x, 40-rank {:.2}/{:.2})",
        s.write_peak_ratio_2_10,
        s.write_avg_ratio_2_10,
        s.read_peak_ratio_2_10,
        s.read_avg_ratio_2_10,
        s.write_ratio_at_40,
        s.read_ratio_at_40
    );
}

#[test]
fn criterion_09_gemv_functional() {
    // Small instances across every partition width.
    let all: Vec<usize> = (1..=8).collect();
    for (dtype, rows, cols) in [
        (GemvDType::Int8, 100, 96),
        (GemvDType::Int8, 61, 53),
        (GemvDType::Int4Bsdp, 48, 64),
        (GemvDType::Int4Bsdp, 100, 320),
    ] {
        let check = run_gemv_functional_check(dtype, rows, cols, SEED + 3, &all).unwrap();
        assert!(check.passed, "{dtype:?} {rows}x{cols}");
    }
    // 64 MB instances at two partition widths.
    let some = [1usize, 5];
    let int8 = run_gemv_functional_check(GemvDType::Int8, 8192, 8192, SEED + 4, &some).unwrap();
    assert!(int8.passed, "64 MB INT8");
    let int4 =
        run_gemv_functional_check(GemvDType::Int4Bsdp, 8192, 16384, SEED + 5, &some).unwrap();
    assert!(int4.passed, "64 MB INT4");
    println!("criterion 09 (GEMV functional, exact): PASS");
}

#[test]
fn criterion_10_gemv_estimates() {
    let cfg = cfg();
    const MB: u64 = 1024 * 1024;
    const GB: u64 = 1024 * MB;

    // Resident-matrix scenario at 128 GB: compute time and its ratio to the
    // vector legs.
    let v8 = run_gemv_estimate(GemvDType::Int8, Scenario::V, 128 * GB, &cfg).unwrap();
    assert_within(
        "INT8 GEMV-V compute at 128 GB",
        v8.breakdown.compute_s,
        0.4,
        0.25,
    );
    let vec_legs = v8.breakdown.vector_transfer_s + v8.breakdown.result_transfer_s;
    assert_within(
        "compute vs vector transfers",
        v8.breakdown.compute_s / vec_legs,
        57.0,
        0.25,
    );
    assert_within("INT8 GEMV-V peak GOPS", v8.breakdown.gops, 650.0, 0.25);

    // Matrix streaming dominates the full-transfer scenario at every size.
    for bytes in [256 * MB, 8 * GB, 128 * GB] {
        let mv = run_gemv_estimate(GemvDType::Int8, Scenario::Mv, bytes, &cfg).unwrap();
        assert_within(
            "INT8 matrix transfer vs compute",
            mv.breakdown.matrix_transfer_s / mv.breakdown.compute_s,
            10.0,
            0.25,
        );
    }
    let mv4 = run_gemv_estimate(GemvDType::Int4Bsdp, Scenario::Mv, 128 * GB, &cfg).unwrap();
    assert_within(
        "INT4 matrix transfer vs compute",
        mv4.breakdown.matrix_transfer_s / mv4.breakdown.compute_s,
        10.0,
        0.25,
    );
    assert_within("INT4 GEMV-MV peak GOPS", mv4.breakdown.gops, 100.0, 0.25);

    let v4 = run_gemv_estimate(GemvDType::Int4Bsdp, Scenario::V, 128 * GB, &cfg).unwrap();
    assert_within("INT4 GEMV-V peak GOPS", v4.breakdown.gops, 1000.0, 0.25);
    assert_within(
        "INT4/INT8 GEMV-V ratio",
        v4.breakdown.gops / v8.breakdown.gops,
        1.53,
        0.10,
    );

    // Resident-matrix throughput grows with matrix size up to the compute
    // bound.
    let mut last = 0.0;
    for bytes in [256 * MB, GB, 8 * GB, 32 * GB, 128 * GB] {
        let v = run_gemv_estimate(GemvDType::Int8, Scenario::V, bytes, &cfg).unwrap();
        assert!(v.breakdown.gops > last);
        last = v.breakdown.gops;
    }
    println!(
        "criterion 10 (GEMV estimates +-25%): PASS (V compute {:.3}s, {:.0}x vector legs, {:.0}/{:.0} GOPS, INT4 MV {:.0} GOPS)",
        v8.breakdown.compute_s,
        v8.breakdown.compute_s / vec_legs,
        v8.breakdown.gops,
        v4.breakdown.gops,
        mv4.breakdown.gops
    );
}

#[test]
fn criterion_11_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_dpusim");
    let dir = std::env::temp_dir().join(format!("dpusim-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("small.toml");
    std::fs::write(
        &config_path,
        "[bench]\narith_elements = 65536\nbsdp_elements = 32768\n",
    )
    .unwrap();

    let run = |args: &[&str], out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args(["--config", config_path.to_str().unwrap()])
            .args(["--seed", "7", "--format", "json"])
            .args(["--out", out.to_str().unwrap()])
            .args(args)
            .status()
            .unwrap();
        assert!(status.success(), "{args:?} failed");
        std::fs::read(out).unwrap()
    };

    for (name, args) in [
        ("arith", vec!["arith", "--dtype", "int8", "--op", "mul"]),
        ("bsdp", vec!["bsdp"]),
        ("transfer", vec!["transfer"]),
        (
            "gemv",
            vec!["gemv", "--sizes", "256MB", "--rows", "64", "--cols", "64"],
        ),
    ] {
        let a = run(&args, &dir.join(format!("{name}-a.json")));
        let b = run(&args, &dir.join(format!("{name}-b.json")));
        assert_eq!(a, b, "{name} report differs between runs");
        assert!(!a.is_empty());
    }
    std::fs::remove_dir_all(&dir).ok();
    println!("criterion 11 (CLI determinism, byte-exact): PASS");
}
