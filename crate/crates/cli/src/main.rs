//! Benchmark harness for the PIM performance models: arithmetic
//! microbenchmarks, the bit-serial dot product, host<->PIM transfer sweeps,
//! and GEMV scenarios.
//!
//! Exit codes: 0 when every inline oracle check passes, 1 when a kernel
//! output disagrees with its oracle, 2 for usage and configuration errors.

mod commands;
mod report;

use clap::{Parser, Subcommand};
use commands::{arith, bsdp, gemv, transfer};
use dpusim::config::SimConfig;
use report::Format;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "dpusim",
    version,
    about = "DPU kernel and transfer model benchmarks"
)]
struct Cli {
    /// Calibration/topology TOML file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all generated inputs.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output format: table|json|csv.
    #[arg(long, global = true, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-DPU arithmetic microbenchmarks (add/mul, all variants).
    Arith(arith::ArithArgs),
    /// Bit-serial INT4 dot product vs native INT8 kernels.
    Bsdp(bsdp::BsdpArgs),
    /// Host<->PIM transfer throughput by rank count and policy.
    Transfer(transfer::TransferArgs),
    /// GEMV timing estimates and functional verification.
    Gemv(gemv::GemvArgs),
}

const EXIT_ORACLE_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn run(cli: &Cli) -> Result<bool, dpusim::Error> {
    let cfg = match &cli.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    cfg.validate()?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Arith(args) => {
            let report = arith::run(args, cli.seed, &cfg)?;
            report.emit(cli.format, out)?;
            Ok(arith::all_ok(&report.cases))
        }
        Command::Bsdp(args) => {
            let report = bsdp::run(args, cli.seed, &cfg)?;
            report.emit(cli.format, out)?;
            Ok(bsdp::all_ok(&report.cases))
        }
        Command::Transfer(args) => {
            let report = transfer::run(args, cli.seed, &cfg)?;
            report.emit(cli.format, out)?;
            Ok(true)
        }
        Command::Gemv(args) => {
            let report = gemv::run(args, cli.seed, &cfg)?;
            report.emit(cli.format, out)?;
            Ok(gemv::all_ok(&report.cases))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: an inline oracle check failed");
            ExitCode::from(EXIT_ORACLE_FAILURE)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
