//! Benchmark drivers: run the kernels on seeded inputs, verify their
//! outputs against plain-arithmetic oracles inline, and convert traces into
//! throughput figures. The CLI renders these results; tests assert on them.

use crate::bsdp::{bsdp_dot, transpose_to_bitplanes};
use crate::config::SimConfig;
use crate::cycles::{throughput_mops, LoopModel};
use crate::datagen;
use crate::gemv::{
    self, estimate_gemv, plan_gemv, GemvDType, GemvMatrix, GemvVector, Scenario, TimingBreakdown,
};
use crate::isa::Signedness;
use crate::kernels::{
    int8_dot_baseline, int8_dot_blocked, iteration_width, resolve_unroll, update_microkernel,
    ArithOp, DType, Unroll, UpdateInput, Variant, BLOCK_SIZE_BYTES,
};
use crate::transfer::{allocate_ranks, policy_throughput, AllocationPolicy, Direction, PolicyKind};
use crate::{Error, Result};
use serde::Serialize;

/// One arithmetic microbenchmark configuration and its modeled outcome.
#[derive(Debug, Clone, Serialize)]
pub struct ArithCase {
    pub dtype: DType,
    pub op: ArithOp,
    pub variant: Variant,
    pub unroll: Unroll,
    /// Control cost and the unroll factor the request resolved to.
    pub loop_model: LoopModel,
    pub elements: usize,
    pub total_instructions: u64,
    pub cycles_per_element: f64,
    /// Worst-case per-element cycles for data-dependent kernels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case_cycles_per_element: Option<f64>,
    /// MOPS at tasklet counts 1..=max.
    pub mops_by_tasklets: Vec<f64>,
    pub mops_at_saturation: f64,
    pub oracle_ok: bool,
}

fn wrapped_expectation_i8(buffer: &[i8], scalar: i8, op: ArithOp) -> Vec<u32> {
    buffer
        .iter()
        .map(|&x| match op {
            ArithOp::Add => x.wrapping_add(scalar) as u8 as u32,
            ArithOp::Mul => x.wrapping_mul(scalar) as u8 as u32,
        })
        .collect()
}

fn wrapped_expectation_i32(buffer: &[i32], scalar: i32, op: ArithOp) -> Vec<u32> {
    buffer
        .iter()
        .map(|&x| match op {
            ArithOp::Add => x.wrapping_add(scalar) as u32,
            ArithOp::Mul => x.wrapping_mul(scalar) as u32,
        })
        .collect()
}

/// Steps the shift-and-add routine needs in the worst case for this dtype's
/// operand range, as per-element cycles of the baseline multiply loop.
fn worst_case_baseline_mul(dtype: DType) -> f64 {
    let (steps, ctrl) = match dtype {
        // Byte operands resolve in at most 8 post-shift steps.
        DType::Int8 => (8, 2),
        DType::Int32 => (32, 3),
    };
    // load + call jump + routine setup (5 slots) + steps + store + control
    (1 + 1 + 5 + steps + 1 + ctrl) as f64
}

/// Runs one arithmetic microbenchmark case.
pub fn run_arith_case(
    dtype: DType,
    op: ArithOp,
    variant: Variant,
    unroll: Unroll,
    seed: u64,
    cfg: &SimConfig,
) -> Result<ArithCase> {
    let n = cfg.bench.arith_elements;
    let (result, oracle_ok) = match dtype {
        DType::Int8 => {
            let buffer = datagen::i8_buffer(seed, n);
            let scalar = match op {
                ArithOp::Add => cfg.bench.int8_add_scalar,
                ArithOp::Mul => cfg.bench.int8_mul_scalar,
            };
            let r = update_microkernel(
                UpdateInput::Int8 {
                    buffer: &buffer,
                    scalar,
                },
                op,
                variant,
                unroll,
                &cfg.memory,
            )?;
            let ok = r.outputs == wrapped_expectation_i8(&buffer, scalar, op);
            (r, ok)
        }
        DType::Int32 => {
            let buffer = datagen::i32_buffer(seed, n);
            let scalar = match op {
                ArithOp::Add => cfg.bench.int32_add_scalar,
                ArithOp::Mul => cfg.bench.int32_mul_scalar,
            };
            let r = update_microkernel(
                UpdateInput::Int32 {
                    buffer: &buffer,
                    scalar,
                },
                op,
                variant,
                unroll,
                &cfg.memory,
            )?;
            let ok = r.outputs == wrapped_expectation_i32(&buffer, scalar, op);
            (r, ok)
        }
    };

    let total = result.trace.total_instructions();
    let cycles_per_element = total as f64 / n as f64;
    let mops_by_tasklets = (1..=cfg.pipeline.max_tasklets)
        .map(|t| Ok(throughput_mops(cycles_per_element, t, &cfg.pipeline)?.mops))
        .collect::<Result<Vec<f64>>>()?;
    let mops_at_saturation = throughput_mops(
        cycles_per_element,
        cfg.pipeline.saturation_tasklets,
        &cfg.pipeline,
    )?
    .mops;
    let worst_case = match (op, variant) {
        (ArithOp::Mul, Variant::Baseline) => Some(worst_case_baseline_mul(dtype)),
        _ => None,
    };
    let iters_per_block =
        (BLOCK_SIZE_BYTES / dtype.element_bytes() / iteration_width(variant)) as u64;
    let loop_model = LoopModel {
        control_overhead_per_iteration: dtype.control_instructions(),
        unroll_factor: resolve_unroll(unroll, iters_per_block, dtype, op, variant, &cfg.memory)?,
    };
    Ok(ArithCase {
        dtype,
        op,
        variant,
        unroll,
        loop_model,
        elements: n,
        total_instructions: total,
        cycles_per_element,
        worst_case_cycles_per_element: worst_case,
        mops_by_tasklets,
        mops_at_saturation,
        oracle_ok,
    })
}

/// The default case grid mirroring the arithmetic experiments.
pub fn default_arith_grid() -> Vec<(DType, ArithOp, Variant)> {
    vec![
        (DType::Int8, ArithOp::Add, Variant::Baseline),
        (DType::Int8, ArithOp::Mul, Variant::Baseline),
        (DType::Int8, ArithOp::Mul, Variant::Ni),
        (DType::Int8, ArithOp::Mul, Variant::NiX4),
        (DType::Int8, ArithOp::Mul, Variant::NiX8),
        (DType::Int32, ArithOp::Add, Variant::Baseline),
        (DType::Int32, ArithOp::Mul, Variant::Baseline),
        (DType::Int32, ArithOp::Mul, Variant::Dim),
    ]
}

/// Dot-product benchmark outcome: the bit-serial kernel against the two
/// native INT8 formulations of the same INT4 workload.
#[derive(Debug, Clone, Serialize)]
pub struct BsdpCase {
    pub signedness: Signedness,
    pub elements: usize,
    pub bsdp_cycles_per_element: f64,
    pub baseline_cycles_per_element: f64,
    pub optimized_cycles_per_element: f64,
    pub bsdp_mops: f64,
    pub baseline_mops: f64,
    pub optimized_mops: f64,
    pub speedup_vs_baseline: f64,
    pub speedup_vs_optimized: f64,
    pub dot_ok: bool,
}

/// Runs the INT4 dot-product benchmark at one signedness.
pub fn run_bsdp_case(signedness: Signedness, seed: u64, cfg: &SimConfig) -> Result<BsdpCase> {
    let n = cfg.bench.bsdp_elements;
    if n == 0 || !n.is_multiple_of(32) {
        return Err(Error::BadVectorLength(n));
    }
    let a = datagen::nibble_buffer(seed, n, signedness);
    let b = datagen::nibble_buffer(seed.wrapping_add(1), n, signedness);

    let naive: u32 = a.iter().zip(&b).fold(0u32, |acc, (&x, &y)| {
        acc.wrapping_add((x as i32).wrapping_mul(y as i32) as u32)
    });

    let ap = transpose_to_bitplanes(&a, signedness)?;
    let bp = transpose_to_bitplanes(&b, signedness)?;
    let bit_serial = bsdp_dot(&ap, &bp)?;
    let baseline = int8_dot_baseline(&a, &b, signedness)?;
    let optimized = int8_dot_blocked(&a, &b, signedness)?;

    let dot_ok = bit_serial.outputs[0] == naive
        && baseline.outputs[0] == naive
        && optimized.outputs[0] == naive;

    let per_elem = |total: u64| total as f64 / n as f64;
    let bsdp_c = per_elem(bit_serial.trace.total_instructions());
    let base_c = per_elem(baseline.trace.total_instructions());
    let opt_c = per_elem(optimized.trace.total_instructions());
    let sat = cfg.pipeline.saturation_tasklets;
    let mops = |c: f64| -> Result<f64> { Ok(throughput_mops(c, sat, &cfg.pipeline)?.mops) };
    let bsdp_mops = mops(bsdp_c)?;
    let baseline_mops = mops(base_c)?;
    let optimized_mops = mops(opt_c)?;
    Ok(BsdpCase {
        signedness,
        elements: n,
        bsdp_cycles_per_element: bsdp_c,
        baseline_cycles_per_element: base_c,
        optimized_cycles_per_element: opt_c,
        bsdp_mops,
        baseline_mops,
        optimized_mops,
        speedup_vs_baseline: bsdp_mops / baseline_mops,
        speedup_vs_optimized: bsdp_mops / optimized_mops,
        dot_ok,
    })
}

/// One point of the transfer sweep.
#[derive(Debug, Clone, Serialize)]
pub struct TransferPoint {
    pub ranks: usize,
    pub policy: PolicyKind,
    pub direction: Direction,
    pub gbps: f64,
}

/// Sweeps both policies and directions over a rank-count range.
pub fn run_transfer_sweep(
    min_ranks: usize,
    max_ranks: usize,
    cfg: &SimConfig,
) -> Result<Vec<TransferPoint>> {
    if min_ranks < 2 || max_ranks > cfg.topology.total_ranks() || min_ranks > max_ranks {
        return Err(Error::RankCountOutOfRange(
            min_ranks,
            2,
            cfg.topology.total_ranks(),
        ));
    }
    let mut out = Vec::new();
    for n in min_ranks..=max_ranks {
        for policy in [
            PolicyKind::BaselineSequential,
            PolicyKind::NumaChannelBalanced,
        ] {
            for direction in [Direction::HostToPim, Direction::PimToHost] {
                out.push(TransferPoint {
                    ranks: n,
                    policy,
                    direction,
                    gbps: policy_throughput(n, policy, direction, &cfg.transfer, &cfg.topology)?,
                });
            }
        }
    }
    Ok(out)
}

/// Balanced-over-baseline ratios derived from a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct TransferSummary {
    pub write_peak_ratio_2_10: f64,
    pub write_avg_ratio_2_10: f64,
    pub read_peak_ratio_2_10: f64,
    pub read_avg_ratio_2_10: f64,
    pub write_ratio_at_40: f64,
    pub read_ratio_at_40: f64,
}

pub fn summarize_transfer(cfg: &SimConfig) -> Result<TransferSummary> {
    let ratio = |n: usize, dir: Direction| -> Result<f64> {
        let base = policy_throughput(
            n,
            PolicyKind::BaselineSequential,
            dir,
            &cfg.transfer,
            &cfg.topology,
        )?;
        let bal = policy_throughput(
            n,
            PolicyKind::NumaChannelBalanced,
            dir,
            &cfg.transfer,
            &cfg.topology,
        )?;
        Ok(bal / base)
    };
    let mut summary = TransferSummary {
        write_peak_ratio_2_10: 0.0,
        write_avg_ratio_2_10: 0.0,
        read_peak_ratio_2_10: 0.0,
        read_avg_ratio_2_10: 0.0,
        write_ratio_at_40: ratio(40, Direction::HostToPim)?,
        read_ratio_at_40: ratio(40, Direction::PimToHost)?,
    };
    let mut w = Vec::new();
    let mut r = Vec::new();
    for n in 2..=10 {
        w.push(ratio(n, Direction::HostToPim)?);
        r.push(ratio(n, Direction::PimToHost)?);
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let peak = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max);
    summary.write_peak_ratio_2_10 = peak(&w);
    summary.write_avg_ratio_2_10 = avg(&w);
    summary.read_peak_ratio_2_10 = peak(&r);
    summary.read_avg_ratio_2_10 = avg(&r);
    Ok(summary)
}

/// Square-ish matrix shape for a target byte size: columns a multiple of 32,
/// rows at least the DPU count.
pub fn shape_for_bytes(dtype: GemvDType, target_bytes: u64, min_rows: usize) -> (usize, usize) {
    let elements = match dtype {
        GemvDType::Int8 => target_bytes,
        GemvDType::Int4Bsdp => target_bytes * 2,
    };
    let side = (elements as f64).sqrt();
    let cols = (((side / 32.0).round() as usize).max(1)) * 32;
    let rows = ((elements as f64 / cols as f64).round() as usize).max(min_rows);
    (rows, cols)
}

/// Analytic GEMV estimate for one matrix size and scenario on the full
/// machine.
#[derive(Debug, Clone, Serialize)]
pub struct GemvEstimate {
    pub dtype: GemvDType,
    pub scenario: Scenario,
    pub rows: usize,
    pub cols: usize,
    pub matrix_bytes: u64,
    pub breakdown: TimingBreakdown,
    /// Reference CPU-server throughput for annotation.
    pub server_reference_gops: f64,
}

pub fn run_gemv_estimate(
    dtype: GemvDType,
    scenario: Scenario,
    target_bytes: u64,
    cfg: &SimConfig,
) -> Result<GemvEstimate> {
    let dpus = cfg.topology.total_dpus();
    let (rows, cols) = shape_for_bytes(dtype, target_bytes, dpus);
    let plan = plan_gemv(rows, cols, dpus, dtype)?;
    let ranks = allocate_ranks(
        cfg.topology.total_ranks(),
        &AllocationPolicy::balanced(),
        &cfg.topology,
    )?;
    let breakdown = estimate_gemv(
        &plan,
        scenario,
        &ranks,
        &cfg.transfer,
        &cfg.topology,
        &cfg.pipeline,
    )?;
    let server_reference_gops = match dtype {
        GemvDType::Int8 => gemv::SERVER_INT8_GOPS_TYPICAL,
        GemvDType::Int4Bsdp => gemv::SERVER_INT8_GOPS_TYPICAL * gemv::SERVER_INT4_FACTOR,
    };
    Ok(GemvEstimate {
        dtype,
        scenario,
        rows,
        cols,
        matrix_bytes: dtype.matrix_bytes(rows, cols),
        breakdown,
        server_reference_gops,
    })
}

/// Desk-scale functional verification of a GEMV instance against the naive
/// oracle across a range of partition widths.
#[derive(Debug, Clone, Serialize)]
pub struct GemvFunctionalCheck {
    pub dtype: GemvDType,
    pub rows: usize,
    pub cols: usize,
    pub partitions_checked: Vec<usize>,
    pub passed: bool,
}

pub fn run_gemv_functional_check(
    dtype: GemvDType,
    rows: usize,
    cols: usize,
    seed: u64,
    partitions: &[usize],
) -> Result<GemvFunctionalCheck> {
    let mut passed = true;
    match dtype {
        GemvDType::Int8 => {
            let matrix = datagen::i8_buffer(seed, rows * cols);
            let vector = datagen::i8_buffer(seed.wrapping_add(1), cols);
            let expect = gemv::naive_gemv_int8(&matrix, &vector, rows, cols);
            for &dpus in partitions {
                let plan = plan_gemv(rows, cols, dpus, dtype)?;
                let run = gemv::run_gemv_functional(
                    &plan,
                    GemvMatrix::Int8(&matrix),
                    GemvVector::Int8(&vector),
                )?;
                passed &= run.result == expect;
            }
        }
        GemvDType::Int4Bsdp => {
            let values = datagen::nibble_buffer(seed, rows * cols, Signedness::Signed);
            let vec_values = datagen::nibble_buffer(seed.wrapping_add(1), cols, Signedness::Signed);
            let matrix = gemv::encode_int4_matrix(&values, rows, cols)?;
            let vector = transpose_to_bitplanes(&vec_values, Signedness::Signed)?;
            let expect = gemv::naive_gemv_int8(&values, &vec_values, rows, cols);
            for &dpus in partitions {
                let plan = plan_gemv(rows, cols, dpus, dtype)?;
                let run = gemv::run_gemv_functional(
                    &plan,
                    GemvMatrix::Int4(&matrix),
                    GemvVector::Int4(&vector),
                )?;
                passed &= run.result == expect;
            }
        }
    }
    Ok(GemvFunctionalCheck {
        dtype,
        rows,
        cols,
        partitions_checked: partitions.to_vec(),
        passed,
    })
}
