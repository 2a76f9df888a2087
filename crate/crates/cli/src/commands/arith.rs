//! `arith`: the single-DPU arithmetic microbenchmark sweep.

use crate::report::{fmt_f, Render, Report};
use clap::Args;
use dpusim::bench::{default_arith_grid, run_arith_case, ArithCase};
use dpusim::config::SimConfig;
use dpusim::kernels::{ArithOp, DType, Unroll, Variant};
use dpusim::Result;
use serde::Serialize;

#[derive(Debug, Args)]
pub struct ArithArgs {
    /// Element type (int8|int32); omit to sweep the default grid.
    #[arg(long)]
    pub dtype: Option<String>,
    /// Operation (add|mul).
    #[arg(long)]
    pub op: Option<String>,
    /// Code variant (baseline|ni|nix4|nix8|dim).
    #[arg(long)]
    pub variant: Option<String>,
    /// Unroll factor (1|64|128|auto); omit to sweep 1 and auto.
    #[arg(long)]
    pub unroll: Option<String>,
}

pub fn parse_dtype(s: &str) -> Result<DType> {
    match s {
        "int8" => Ok(DType::Int8),
        "int32" => Ok(DType::Int32),
        other => Err(dpusim::Error::InvalidCombination(format!(
            "unknown dtype '{other}'"
        ))),
    }
}

pub fn parse_op(s: &str) -> Result<ArithOp> {
    match s {
        "add" => Ok(ArithOp::Add),
        "mul" => Ok(ArithOp::Mul),
        other => Err(dpusim::Error::InvalidCombination(format!(
            "unknown op '{other}'"
        ))),
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "baseline" => Ok(Variant::Baseline),
        "ni" => Ok(Variant::Ni),
        "nix4" => Ok(Variant::NiX4),
        "nix8" => Ok(Variant::NiX8),
        "dim" => Ok(Variant::Dim),
        other => Err(dpusim::Error::InvalidCombination(format!(
            "unknown variant '{other}'"
        ))),
    }
}

pub fn parse_unroll(s: &str) -> Result<Unroll> {
    match s {
        "1" => Ok(Unroll::One),
        "64" => Ok(Unroll::X64),
        "128" => Ok(Unroll::X128),
        "auto" => Ok(Unroll::Auto),
        other => Err(dpusim::Error::InvalidCombination(format!(
            "unknown unroll '{other}'"
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct ArithReportBody {
    pub cases: Vec<ArithCase>,
}

pub fn run(args: &ArithArgs, seed: u64, cfg: &SimConfig) -> Result<Report<ArithReportBody>> {
    let grid: Vec<(DType, ArithOp, Variant)> = match (&args.dtype, &args.op, &args.variant) {
        (Some(d), Some(o), Some(v)) => vec![(parse_dtype(d)?, parse_op(o)?, parse_variant(v)?)],
        (None, None, None) => default_arith_grid(),
        _ => {
            let want_d = args.dtype.as_deref().map(parse_dtype).transpose()?;
            let want_o = args.op.as_deref().map(parse_op).transpose()?;
            let want_v = args.variant.as_deref().map(parse_variant).transpose()?;
            default_arith_grid()
                .into_iter()
                .filter(|(d, o, v)| {
                    want_d.is_none_or(|x| x == *d)
                        && want_o.is_none_or(|x| x == *o)
                        && want_v.is_none_or(|x| x == *v)
                })
                .collect()
        }
    };
    if grid.is_empty() {
        return Err(dpusim::Error::InvalidCombination(
            "no benchmark case matches the requested flags".into(),
        ));
    }
    let unrolls: Vec<Unroll> = match &args.unroll {
        Some(u) => vec![parse_unroll(u)?],
        None => vec![Unroll::One, Unroll::Auto],
    };
    let mut cases = Vec::new();
    for &(dtype, op, variant) in &grid {
        for &unroll in &unrolls {
            cases.push(run_arith_case(dtype, op, variant, unroll, seed, cfg)?);
        }
    }
    Ok(Report {
        command: "arith",
        seed,
        calibration: *cfg,
        cases: ArithReportBody { cases },
    })
}

impl Render for ArithReportBody {
    fn table(&self, out: &mut String) {
        out.push_str(&format!(
            "{:<6} {:<4} {:<9} {:<6} {:>10} {:>12} {:>8}\n",
            "dtype", "op", "variant", "unroll", "cyc/elem", "MOPS@11+", "oracle"
        ));
        for c in &self.cases {
            out.push_str(&format!(
                "{:<6} {:<4} {:<9} {:<6} {:>10} {:>12} {:>8}\n",
                format!("{:?}", c.dtype).to_lowercase(),
                format!("{:?}", c.op).to_lowercase(),
                format!("{:?}", c.variant).to_lowercase(),
                format!("{:?}", c.unroll).to_lowercase(),
                fmt_f(c.cycles_per_element),
                fmt_f(c.mops_at_saturation),
                if c.oracle_ok { "pass" } else { "FAIL" },
            ));
        }
    }

    fn csv(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec![
            "dtype".into(),
            "op".into(),
            "variant".into(),
            "unroll".into(),
            "tasklets".into(),
            "mops".into(),
            "cycles_per_element".into(),
            "oracle_ok".into(),
        ]];
        for c in &self.cases {
            for (i, &mops) in c.mops_by_tasklets.iter().enumerate() {
                rows.push(vec![
                    format!("{:?}", c.dtype).to_lowercase(),
                    format!("{:?}", c.op).to_lowercase(),
                    format!("{:?}", c.variant).to_lowercase(),
                    format!("{:?}", c.unroll).to_lowercase(),
                    (i + 1).to_string(),
                    fmt_f(mops),
                    fmt_f(c.cycles_per_element),
                    c.oracle_ok.to_string(),
                ]);
            }
        }
        rows
    }
}

/// True iff every inline oracle check passed.
pub fn all_ok(body: &ArithReportBody) -> bool {
    body.cases.iter().all(|c| c.oracle_ok)
}
