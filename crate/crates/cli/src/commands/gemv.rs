//! `gemv`: matrix-vector timing estimates, desk-scale functional checks,
//! and file-based functional runs.

use crate::report::{fmt_f, Render, Report};
use clap::Args;
use dpusim::bench::{
    run_gemv_estimate, run_gemv_functional_check, GemvEstimate, GemvFunctionalCheck,
};
use dpusim::bsdp::transpose_to_bitplanes;
use dpusim::config::SimConfig;
use dpusim::gemv::{
    encode_int4_matrix, plan_gemv, run_gemv_functional, GemvDType, GemvMatrix, GemvVector, Scenario,
};
use dpusim::io::{decode_matrix, encode_int32_vector, MatrixPayload};
use dpusim::isa::Signedness;
use dpusim::{Error, Result};
use serde::Serialize;
use std::path::PathBuf;

/// Functional verification stays below this matrix size.
pub const FUNCTIONAL_CAP_BYTES: u64 = 64 * 1024 * 1024;

#[derive(Debug, Args)]
pub struct GemvArgs {
    /// int8|int4|both
    #[arg(long, default_value = "both")]
    pub dtype: String,
    /// mv|v|both
    #[arg(long, default_value = "both")]
    pub scenario: String,
    /// Comma-separated modeled matrix sizes, e.g. "256MB,8GB,128GB".
    #[arg(long, default_value = "256MB,1GB,8GB,128GB")]
    pub sizes: String,
    /// Also run desk-scale functional verification against the naive oracle.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub check: bool,
    /// Rows/cols for the functional check instance.
    #[arg(long, default_value_t = 512)]
    pub rows: usize,
    #[arg(long, default_value_t = 512)]
    pub cols: usize,
    /// Simulated DPU count for file-based runs.
    #[arg(long)]
    pub dpus: Option<usize>,
    /// Run on a matrix/vector pair from GMV1 files instead of generating.
    #[arg(long, requires = "vector")]
    pub matrix: Option<PathBuf>,
    #[arg(long, requires = "matrix")]
    pub vector: Option<PathBuf>,
    /// Where to write the GMV1 result vector for file-based runs.
    #[arg(long)]
    pub result_out: Option<PathBuf>,
}

fn parse_bytes(s: &str) -> Result<u64> {
    let s = s.trim();
    let (num, mult) = if let Some(v) = s.strip_suffix("GB") {
        (v, 1024u64 * 1024 * 1024)
    } else if let Some(v) = s.strip_suffix("MB") {
        (v, 1024 * 1024)
    } else if let Some(v) = s.strip_suffix("KB") {
        (v, 1024)
    } else {
        (s, 1)
    };
    num.trim()
        .parse::<u64>()
        .map(|n| n * mult)
        .map_err(|_| Error::InvalidCombination(format!("bad size '{s}'")))
}

fn parse_dtypes(s: &str) -> Result<Vec<GemvDType>> {
    match s {
        "int8" => Ok(vec![GemvDType::Int8]),
        "int4" => Ok(vec![GemvDType::Int4Bsdp]),
        "both" => Ok(vec![GemvDType::Int8, GemvDType::Int4Bsdp]),
        other => Err(Error::InvalidCombination(format!(
            "unknown dtype '{other}'"
        ))),
    }
}

fn parse_scenarios(s: &str) -> Result<Vec<Scenario>> {
    match s {
        "mv" => Ok(vec![Scenario::Mv]),
        "v" => Ok(vec![Scenario::V]),
        "both" => Ok(vec![Scenario::Mv, Scenario::V]),
        other => Err(Error::InvalidCombination(format!(
            "unknown scenario '{other}'"
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct GemvReportBody {
    pub estimates: Vec<GemvEstimate>,
    pub functional_checks: Vec<GemvFunctionalCheck>,
}

pub fn run(args: &GemvArgs, seed: u64, cfg: &SimConfig) -> Result<Report<GemvReportBody>> {
    if let (Some(matrix), Some(vector)) = (&args.matrix, &args.vector) {
        return run_from_files(args, matrix, vector, seed, cfg);
    }
    let dtypes = parse_dtypes(&args.dtype)?;
    let scenarios = parse_scenarios(&args.scenario)?;
    let sizes = args
        .sizes
        .split(',')
        .map(parse_bytes)
        .collect::<Result<Vec<u64>>>()?;

    let mut estimates = Vec::new();
    for &dtype in &dtypes {
        for &bytes in &sizes {
            for &scenario in &scenarios {
                estimates.push(run_gemv_estimate(dtype, scenario, bytes, cfg)?);
            }
        }
    }

    let mut functional_checks = Vec::new();
    if args.check {
        let dtype_bytes = |d: GemvDType| d.matrix_bytes(args.rows, args.cols);
        for &dtype in &dtypes {
            if dtype_bytes(dtype) > FUNCTIONAL_CAP_BYTES {
                return Err(Error::InfeasiblePlan(format!(
                    "functional check capped at {FUNCTIONAL_CAP_BYTES} matrix bytes"
                )));
            }
            let cols = if dtype == GemvDType::Int4Bsdp {
                args.cols.div_ceil(32) * 32
            } else {
                args.cols
            };
            functional_checks.push(run_gemv_functional_check(
                dtype,
                args.rows,
                cols,
                seed,
                &[1, 2, 3, 4, 5, 6, 7, 8],
            )?);
        }
    }
    Ok(Report {
        command: "gemv",
        seed,
        calibration: *cfg,
        cases: GemvReportBody {
            estimates,
            functional_checks,
        },
    })
}

/// Loads operands from GMV1 containers, runs the functional GEMV, and
/// optionally writes the result vector back out.
fn run_from_files(
    args: &GemvArgs,
    matrix_path: &PathBuf,
    vector_path: &PathBuf,
    seed: u64,
    cfg: &SimConfig,
) -> Result<Report<GemvReportBody>> {
    let matrix = decode_matrix(&std::fs::read(matrix_path)?)?;
    let vector = decode_matrix(&std::fs::read(vector_path)?)?;
    let result = match (&matrix, &vector) {
        (
            MatrixPayload::Int8 { rows, cols, data },
            MatrixPayload::Int8 {
                data: vec_data,
                cols: vcols,
                ..
            },
        ) => {
            if *vcols != 1 && vec_data.len() != *cols {
                return Err(Error::ShapeMismatch("vector shape".into()));
            }
            let dpus = args.dpus.unwrap_or(1).min(*rows);
            let plan = plan_gemv(*rows, *cols, dpus, GemvDType::Int8)?;
            run_gemv_functional(&plan, GemvMatrix::Int8(data), GemvVector::Int8(vec_data))?
        }
        (
            MatrixPayload::Int4 { rows, cols, values },
            MatrixPayload::Int4 {
                values: vec_values, ..
            },
        ) => {
            if vec_values.len() != *cols {
                return Err(Error::ShapeMismatch("vector shape".into()));
            }
            let dpus = args.dpus.unwrap_or(1).min(*rows);
            let plan = plan_gemv(*rows, *cols, dpus, GemvDType::Int4Bsdp)?;
            let rows_enc = encode_int4_matrix(values, *rows, *cols)?;
            let vec_enc = transpose_to_bitplanes(vec_values, Signedness::Signed)?;
            run_gemv_functional(
                &plan,
                GemvMatrix::Int4(&rows_enc),
                GemvVector::Int4(&vec_enc),
            )?
        }
        _ => {
            return Err(Error::ShapeMismatch(
                "matrix and vector payload types must match (int8 or int4)".into(),
            ));
        }
    };
    if let Some(out) = &args.result_out {
        std::fs::write(out, encode_int32_vector(&result.result))?;
    }
    Ok(Report {
        command: "gemv",
        seed,
        calibration: *cfg,
        cases: GemvReportBody {
            estimates: Vec::new(),
            functional_checks: Vec::new(),
        },
    })
}

fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::Mv => "mv",
        Scenario::V => "v",
    }
}

fn dtype_name(d: GemvDType) -> &'static str {
    match d {
        GemvDType::Int8 => "int8",
        GemvDType::Int4Bsdp => "int4",
    }
}

impl Render for GemvReportBody {
    fn table(&self, out: &mut String) {
        if !self.estimates.is_empty() {
            out.push_str(&format!(
                "{:<5} {:<3} {:>12} {:>11} {:>11} {:>11} {:>11} {:>9}\n",
                "dtype", "scn", "matrix B", "matrix s", "vector s", "compute s", "result s", "GOPS"
            ));
            for e in &self.estimates {
                let b = &e.breakdown;
                out.push_str(&format!(
                    "{:<5} {:<3} {:>12} {:>11} {:>11} {:>11} {:>11} {:>9}\n",
                    dtype_name(e.dtype),
                    scenario_name(e.scenario),
                    e.matrix_bytes,
                    fmt_f(b.matrix_transfer_s),
                    fmt_f(b.vector_transfer_s),
                    fmt_f(b.compute_s),
                    fmt_f(b.result_transfer_s),
                    fmt_f(b.gops),
                ));
            }
        }
        for c in &self.functional_checks {
            out.push_str(&format!(
                "functional {} {}x{} over {:?} DPUs: {}\n",
                dtype_name(c.dtype),
                c.rows,
                c.cols,
                c.partitions_checked,
                if c.passed { "pass" } else { "FAIL" }
            ));
        }
    }

    fn csv(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec![
            "dtype".into(),
            "scenario".into(),
            "matrix_bytes".into(),
            "matrix_s".into(),
            "vector_s".into(),
            "compute_s".into(),
            "result_s".into(),
            "gops".into(),
        ]];
        for e in &self.estimates {
            let b = &e.breakdown;
            rows.push(vec![
                dtype_name(e.dtype).into(),
                scenario_name(e.scenario).into(),
                e.matrix_bytes.to_string(),
                fmt_f(b.matrix_transfer_s),
                fmt_f(b.vector_transfer_s),
                fmt_f(b.compute_s),
                fmt_f(b.result_transfer_s),
                fmt_f(b.gops),
            ]);
        }
        rows
    }
}

pub fn all_ok(body: &GemvReportBody) -> bool {
    body.functional_checks.iter().all(|c| c.passed)
}
