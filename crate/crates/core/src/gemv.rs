//! Row-block GEMV tiling across DPUs, functional execution at desk scale,
//! and timing estimates that combine the cycle and transfer models.
//!
//! The matrix is split into contiguous, near-equal row blocks, one per DPU;
//! the vector is broadcast. INT8 rows run the blocked byte-multiply dot
//! product, INT4 rows the bit-serial dot product over plane-transposed
//! operands. Accumulators are 32-bit and wrap, matching the DPU word.

use crate::bsdp::{bsdp_dot, BitPlaneVector, BLOCK_CYCLES};
use crate::cycles::PipelineConfig;
use crate::isa::Signedness;
use crate::kernels::int8_dot_blocked;
use crate::transfer::{
    estimate_throughput, BufferPlacement, Direction, RankSet, ServerTopology, TransferCalibration,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Issue slots charged per output row beyond the dot product itself
/// (result store and row-loop control).
pub const ROW_OVERHEAD_CYCLES: u64 = 4;

/// Reference throughput of a contemporary dual-socket CPU server on INT8
/// GEMV, for report annotation only; the model never computes these.
pub const SERVER_INT8_GOPS_TYPICAL: f64 = 200.0;
pub const SERVER_INT8_GOPS_PEAK: f64 = 220.0;
/// The same server's INT4 GEMV lands at about half its INT8 rate.
pub const SERVER_INT4_FACTOR: f64 = 0.5;

/// Element type of a GEMV run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GemvDType {
    Int8,
    /// 4-bit elements in bit-plane form, combined bit-serially.
    Int4Bsdp,
}

impl GemvDType {
    /// Matrix bytes per element (INT4 packs two per byte).
    pub fn matrix_bytes(self, rows: usize, cols: usize) -> u64 {
        match self {
            GemvDType::Int8 => rows as u64 * cols as u64,
            GemvDType::Int4Bsdp => rows as u64 * cols as u64 / 2,
        }
    }

    pub fn vector_bytes(self, cols: usize) -> u64 {
        match self {
            GemvDType::Int8 => cols as u64,
            GemvDType::Int4Bsdp => cols as u64 / 2,
        }
    }
}

/// Per-row dot-product cost in issue slots for one dtype.
pub fn row_cycles(dtype: GemvDType, cols: usize) -> u64 {
    let dot = match dtype {
        // 22 slots per 8 elements, 4 per trailing element.
        GemvDType::Int8 => (cols as u64 / 8) * 22 + (cols as u64 % 8) * 4,
        GemvDType::Int4Bsdp => (cols as u64 / 32) * BLOCK_CYCLES,
    };
    dot + ROW_OVERHEAD_CYCLES
}

/// Contiguous row-block assignment of a matrix to DPUs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GemvPlan {
    pub rows: usize,
    pub cols: usize,
    pub dpu_count: usize,
    pub dtype: GemvDType,
    row_ranges: Vec<Range<usize>>,
}

impl GemvPlan {
    /// Row ranges per DPU, in DPU order. Ranges are disjoint, contiguous,
    /// cover all rows, and differ in length by at most one.
    pub fn row_ranges(&self) -> &[Range<usize>] {
        &self.row_ranges
    }

    pub fn max_rows_per_dpu(&self) -> usize {
        self.row_ranges.iter().map(|r| r.len()).max().unwrap_or(0)
    }

    /// Issue slots on the busiest DPU.
    pub fn max_dpu_cycles(&self) -> u64 {
        self.max_rows_per_dpu() as u64 * row_cycles(self.dtype, self.cols)
    }

    pub fn total_ops(&self) -> u64 {
        // One multiply and one add per matrix element.
        2 * self.rows as u64 * self.cols as u64
    }
}

/// Splits `rows` x `cols` across `dpu_count` DPUs in contiguous blocks.
pub fn plan_gemv(rows: usize, cols: usize, dpu_count: usize, dtype: GemvDType) -> Result<GemvPlan> {
    if dpu_count == 0 || rows < dpu_count {
        return Err(Error::InfeasiblePlan(format!(
            "rows {rows} must be >= dpu count {dpu_count} >= 1"
        )));
    }
    if cols == 0 {
        return Err(Error::InfeasiblePlan("matrix has no columns".into()));
    }
    if dtype == GemvDType::Int4Bsdp && !cols.is_multiple_of(32) {
        return Err(Error::InfeasiblePlan(format!(
            "INT4 column count {cols} must be a multiple of 32"
        )));
    }
    let base = rows / dpu_count;
    let extra = rows % dpu_count;
    let mut row_ranges = Vec::with_capacity(dpu_count);
    let mut start = 0;
    for d in 0..dpu_count {
        let len = base + usize::from(d < extra);
        row_ranges.push(start..start + len);
        start += len;
    }
    Ok(GemvPlan {
        rows,
        cols,
        dpu_count,
        dtype,
        row_ranges,
    })
}

/// Matrix operand for a functional run.
#[derive(Debug, Clone, Copy)]
pub enum GemvMatrix<'a> {
    /// Row-major `rows * cols` signed bytes.
    Int8(&'a [i8]),
    /// One plane-transposed vector per row.
    Int4(&'a [BitPlaneVector]),
}

/// Vector operand for a functional run.
#[derive(Debug, Clone, Copy)]
pub enum GemvVector<'a> {
    Int8(&'a [i8]),
    Int4(&'a BitPlaneVector),
}

/// Result of a functional GEMV: outputs in row order plus the issue-slot
/// count of the busiest DPU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GemvRun {
    pub result: Vec<i32>,
    pub max_dpu_cycles: u64,
}

/// Runs the planned GEMV with per-DPU kernels and reduces the per-DPU
/// outputs in row order. The result equals the naive matrix-vector product
/// under 32-bit wrapping arithmetic regardless of the partition.
pub fn run_gemv_functional(
    plan: &GemvPlan,
    matrix: GemvMatrix<'_>,
    vector: GemvVector<'_>,
) -> Result<GemvRun> {
    let mut result = Vec::with_capacity(plan.rows);
    let mut max_dpu_cycles = 0u64;
    match (plan.dtype, matrix, vector) {
        (GemvDType::Int8, GemvMatrix::Int8(data), GemvVector::Int8(vec)) => {
            if data.len() != plan.rows * plan.cols {
                return Err(Error::ShapeMismatch(format!(
                    "matrix has {} elements, plan wants {}",
                    data.len(),
                    plan.rows * plan.cols
                )));
            }
            if vec.len() != plan.cols {
                return Err(Error::ShapeMismatch(format!(
                    "vector length {} vs {} columns",
                    vec.len(),
                    plan.cols
                )));
            }
            for range in plan.row_ranges() {
                let mut dpu_cycles = 0u64;
                for row in range.clone() {
                    let row_data = &data[row * plan.cols..(row + 1) * plan.cols];
                    let dot = int8_dot_blocked(row_data, vec, Signedness::Signed)?;
                    dpu_cycles += dot.trace.total_instructions() + ROW_OVERHEAD_CYCLES;
                    result.push(dot.outputs[0] as i32);
                }
                max_dpu_cycles = max_dpu_cycles.max(dpu_cycles);
            }
        }
        (GemvDType::Int4Bsdp, GemvMatrix::Int4(rows), GemvVector::Int4(vec)) => {
            if rows.len() != plan.rows {
                return Err(Error::ShapeMismatch(format!(
                    "matrix has {} rows, plan wants {}",
                    rows.len(),
                    plan.rows
                )));
            }
            for range in plan.row_ranges() {
                let mut dpu_cycles = 0u64;
                for row in range.clone() {
                    if rows[row].len() != plan.cols {
                        return Err(Error::ShapeMismatch(format!(
                            "row {row} has {} elements, plan wants {}",
                            rows[row].len(),
                            plan.cols
                        )));
                    }
                    let dot = bsdp_dot(&rows[row], vec)?;
                    dpu_cycles += dot.trace.total_instructions() + ROW_OVERHEAD_CYCLES;
                    result.push(dot.outputs[0] as i32);
                }
                max_dpu_cycles = max_dpu_cycles.max(dpu_cycles);
            }
        }
        _ => {
            return Err(Error::ShapeMismatch(
                "operand dtypes do not match the plan".into(),
            ));
        }
    }
    Ok(GemvRun {
        result,
        max_dpu_cycles,
    })
}

/// Timing scenario: transfer the matrix every launch, or assume it resident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Matrix and vector both move to PIM, results come back.
    Mv,
    /// Matrix already resident; only vector and results move.
    V,
}

/// Time components of one estimated GEMV launch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub scenario: Scenario,
    pub matrix_transfer_s: f64,
    pub vector_transfer_s: f64,
    pub compute_s: f64,
    pub result_transfer_s: f64,
    /// Billions of counted add-and-multiply operations per second over the
    /// scenario's total time.
    pub gops: f64,
}

impl TimingBreakdown {
    pub fn total_s(&self) -> f64 {
        self.matrix_transfer_s + self.vector_transfer_s + self.compute_s + self.result_transfer_s
    }
}

fn blocks_bytes(bytes: u64, cal: &TransferCalibration) -> f64 {
    let block = cal.transfer_block_bytes;
    (bytes.div_ceil(block) * block) as f64
}

/// Estimates one GEMV launch on the given rank set.
///
/// Compute time is the busiest DPU's issue slots at the saturated clock
/// (11+ tasklets, one instruction per cycle). Matrix and vector pushes are
/// parallel writes capped additionally by the cold-stream layout
/// transposition; the vector broadcast is modeled as such a write. Results
/// return on the synchronous read path.
pub fn estimate_gemv(
    plan: &GemvPlan,
    scenario: Scenario,
    ranks: &RankSet,
    cal: &TransferCalibration,
    topo: &ServerTopology,
    pipeline: &PipelineConfig,
) -> Result<TimingBreakdown> {
    if plan.dpu_count > ranks.dpu_capacity(topo) {
        return Err(Error::InfeasiblePlan(format!(
            "{} DPUs exceed the capacity of {} ranks",
            plan.dpu_count,
            ranks.len()
        )));
    }
    let write = estimate_throughput(
        ranks,
        Direction::HostToPim,
        BufferPlacement::PerNode,
        cal,
        topo,
    )?;
    let stream_write = write.min(cal.stream_write_cap_gbps);
    let read = estimate_throughput(
        ranks,
        Direction::PimToHost,
        BufferPlacement::PerNode,
        cal,
        topo,
    )?;

    let matrix_transfer_s = match scenario {
        Scenario::Mv => {
            blocks_bytes(plan.dtype.matrix_bytes(plan.rows, plan.cols), cal) / (stream_write * 1e9)
        }
        Scenario::V => 0.0,
    };
    let vector_transfer_s =
        blocks_bytes(plan.dtype.vector_bytes(plan.cols), cal) / (stream_write * 1e9);
    let result_transfer_s = blocks_bytes(plan.rows as u64 * 4, cal) / (read * 1e9);
    let compute_s = plan.max_dpu_cycles() as f64 / pipeline.frequency_hz;

    let mut breakdown = TimingBreakdown {
        scenario,
        matrix_transfer_s,
        vector_transfer_s,
        compute_s,
        result_transfer_s,
        gops: 0.0,
    };
    breakdown.gops = plan.total_ops() as f64 / breakdown.total_s() / 1e9;
    Ok(breakdown)
}

/// Transposes raw 4-bit row-major matrix values into per-row plane vectors.
pub fn encode_int4_matrix(values: &[i8], rows: usize, cols: usize) -> Result<Vec<BitPlaneVector>> {
    if values.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "expected {} values, got {}",
            rows * cols,
            values.len()
        )));
    }
    values
        .chunks(cols)
        .map(|row| crate::bsdp::transpose_to_bitplanes(row, Signedness::Signed))
        .collect()
}

/// Naive reference matrix-vector product with wrapping 32-bit accumulation.
pub fn naive_gemv_int8(matrix: &[i8], vector: &[i8], rows: usize, cols: usize) -> Vec<i32> {
    (0..rows)
        .map(|r| {
            matrix[r * cols..(r + 1) * cols]
                .iter()
                .zip(vector)
                .fold(0i32, |acc, (&a, &x)| {
                    acc.wrapping_add((a as i32).wrapping_mul(x as i32))
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsdp::transpose_to_bitplanes;
    use crate::datagen;

    #[test]
    fn plan_examples() {
        let p = plan_gemv(2551, 1024, 2551, GemvDType::Int8).unwrap();
        assert!(p.row_ranges().iter().all(|r| r.len() == 1));

        let p = plan_gemv(100, 32, 7, GemvDType::Int8).unwrap();
        let lens: Vec<usize> = p.row_ranges().iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![15, 15, 14, 14, 14, 14, 14]);

        assert!(plan_gemv(10, 33, 1, GemvDType::Int4Bsdp).is_err());
        assert!(plan_gemv(5, 32, 6, GemvDType::Int8).is_err());
    }

    #[test]
    fn plan_ranges_partition_rows() {
        let p = plan_gemv(1000, 64, 7, GemvDType::Int8).unwrap();
        let mut expected_start = 0;
        for r in p.row_ranges() {
            assert_eq!(r.start, expected_start);
            expected_start = r.end;
        }
        assert_eq!(expected_start, 1000);
        let (min, max) = p.row_ranges().iter().fold((usize::MAX, 0), |(lo, hi), r| {
            (lo.min(r.len()), hi.max(r.len()))
        });
        assert!(max - min <= 1);
    }

    #[test]
    fn identity_matrix_returns_vector() {
        let n = 16;
        let mut matrix = vec![0i8; n * n];
        for i in 0..n {
            matrix[i * n + i] = 1;
        }
        let vector: Vec<i8> = (0..n as i32).map(|v| v as i8 - 8).collect();
        let plan = plan_gemv(n, n, 4, GemvDType::Int8).unwrap();
        let run = run_gemv_functional(&plan, GemvMatrix::Int8(&matrix), GemvVector::Int8(&vector))
            .unwrap();
        assert_eq!(
            run.result,
            vector.iter().map(|&v| v as i32).collect::<Vec<_>>()
        );
    }

    #[test]
    fn all_ones_int4_sums_columns() {
        let rows = 8;
        let cols = 32;
        let values = vec![1i8; rows * cols];
        let matrix = encode_int4_matrix(&values, rows, cols).unwrap();
        let vector = transpose_to_bitplanes(&vec![1i8; cols], Signedness::Signed).unwrap();
        let plan = plan_gemv(rows, cols, 2, GemvDType::Int4Bsdp).unwrap();
        let run = run_gemv_functional(&plan, GemvMatrix::Int4(&matrix), GemvVector::Int4(&vector))
            .unwrap();
        assert_eq!(run.result, vec![32; rows]);
    }

    #[test]
    fn tiling_invariance_int8() {
        let (rows, cols) = (60, 52);
        let matrix = datagen::i8_buffer(100, rows * cols);
        let vector = datagen::i8_buffer(101, cols);
        let expect = naive_gemv_int8(&matrix, &vector, rows, cols);
        for dpus in 1..=8 {
            let plan = plan_gemv(rows, cols, dpus, GemvDType::Int8).unwrap();
            let run =
                run_gemv_functional(&plan, GemvMatrix::Int8(&matrix), GemvVector::Int8(&vector))
                    .unwrap();
            assert_eq!(run.result, expect, "{dpus} DPUs");
        }
    }

    #[test]
    fn tiling_invariance_int4() {
        let (rows, cols) = (24, 96);
        let values = datagen::nibble_buffer(7, rows * cols, Signedness::Signed);
        let vec_values = datagen::nibble_buffer(8, cols, Signedness::Signed);
        let matrix = encode_int4_matrix(&values, rows, cols).unwrap();
        let vector = transpose_to_bitplanes(&vec_values, Signedness::Signed).unwrap();
        let expect = naive_gemv_int8(&values, &vec_values, rows, cols);
        for dpus in 1..=8 {
            let plan = plan_gemv(rows, cols, dpus, GemvDType::Int4Bsdp).unwrap();
            let run =
                run_gemv_functional(&plan, GemvMatrix::Int4(&matrix), GemvVector::Int4(&vector))
                    .unwrap();
            assert_eq!(run.result, expect, "{dpus} DPUs");
        }
    }

    #[test]
    fn functional_cycles_match_analytic_row_costs() {
        let (rows, cols) = (10, 64);
        let matrix = datagen::i8_buffer(55, rows * cols);
        let vector = datagen::i8_buffer(56, cols);
        let plan = plan_gemv(rows, cols, 2, GemvDType::Int8).unwrap();
        let run = run_gemv_functional(&plan, GemvMatrix::Int8(&matrix), GemvVector::Int8(&vector))
            .unwrap();
        assert_eq!(run.max_dpu_cycles, plan.max_dpu_cycles());
    }

    #[test]
    fn vector_legs_on_full_machine_land_in_fixed_overhead_window() {
        // Pushing a vector and pulling a result are block-granular, so on
        // the full machine they behave as a launch overhead of a few
        // milliseconds regardless of the vector length.
        let topo = ServerTopology::default();
        let cal = TransferCalibration::default();
        let pipeline = PipelineConfig::default();
        let ranks = crate::transfer::allocate_ranks(
            40,
            &crate::transfer::AllocationPolicy::balanced(),
            &topo,
        )
        .unwrap();
        for cols in [16384usize, 131072, 370720] {
            let plan = plan_gemv(cols, cols, topo.total_dpus(), GemvDType::Int8).unwrap();
            let est = estimate_gemv(&plan, Scenario::V, &ranks, &cal, &topo, &pipeline).unwrap();
            let legs = est.vector_transfer_s + est.result_transfer_s;
            assert!(
                (0.002..=0.007).contains(&legs),
                "legs {legs} for {cols} cols"
            );
        }
    }

    #[test]
    fn v_scenario_is_strictly_faster_and_has_no_matrix_leg() {
        let topo = ServerTopology::default();
        let cal = TransferCalibration::default();
        let pipeline = PipelineConfig::default();
        let ranks = crate::transfer::allocate_ranks(
            40,
            &crate::transfer::AllocationPolicy::balanced(),
            &topo,
        )
        .unwrap();
        let plan = plan_gemv(40960, 4096, topo.total_dpus(), GemvDType::Int8).unwrap();
        let mv = estimate_gemv(&plan, Scenario::Mv, &ranks, &cal, &topo, &pipeline).unwrap();
        let v = estimate_gemv(&plan, Scenario::V, &ranks, &cal, &topo, &pipeline).unwrap();
        assert_eq!(v.matrix_transfer_s, 0.0);
        assert!(mv.matrix_transfer_s > 0.0);
        assert!(v.total_s() < mv.total_s());
        assert!(v.gops > mv.gops);
    }
}
