//! `transfer`: host<->PIM throughput sweep over rank counts and policies,
//! or a single-point query with explicit placement.

use crate::report::{fmt_f, Render, Report};
use clap::Args;
use dpusim::bench::{run_transfer_sweep, summarize_transfer, TransferPoint, TransferSummary};
use dpusim::config::SimConfig;
use dpusim::transfer::{
    allocate_ranks, estimate_throughput, AllocationPolicy, BufferPlacement, Direction, PolicyKind,
};
use dpusim::Result;
use serde::Serialize;

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Single-point mode: evaluate exactly this rank count.
    #[arg(long)]
    pub ranks: Option<usize>,
    /// baseline|balanced (single-point mode; sweeps cover both).
    #[arg(long, default_value = "balanced")]
    pub policy: String,
    /// host-to-pim|pim-to-host (single-point mode; sweeps cover both).
    #[arg(long, default_value = "host-to-pim")]
    pub direction: String,
    /// node0|node1|per-node buffer placement (single-point mode).
    #[arg(long, default_value = "per-node")]
    pub placement: String,
    /// Sweep bounds.
    #[arg(long, default_value_t = 2)]
    pub min_ranks: usize,
    #[arg(long, default_value_t = 40)]
    pub max_ranks: usize,
}

fn parse_policy(s: &str) -> Result<PolicyKind> {
    match s {
        "baseline" => Ok(PolicyKind::BaselineSequential),
        "balanced" => Ok(PolicyKind::NumaChannelBalanced),
        other => Err(dpusim::Error::InvalidCombination(format!(
            "unknown policy '{other}'"
        ))),
    }
}

fn parse_direction(s: &str) -> Result<Direction> {
    match s {
        "host-to-pim" => Ok(Direction::HostToPim),
        "pim-to-host" => Ok(Direction::PimToHost),
        other => Err(dpusim::Error::InvalidCombination(format!(
            "unknown direction '{other}'"
        ))),
    }
}

fn parse_placement(s: &str) -> Result<BufferPlacement> {
    match s {
        "node0" => Ok(BufferPlacement::Node(0)),
        "node1" => Ok(BufferPlacement::Node(1)),
        "per-node" => Ok(BufferPlacement::PerNode),
        other => Err(dpusim::Error::InvalidCombination(format!(
            "unknown placement '{other}'"
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct TransferReportBody {
    pub points: Vec<TransferPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<TransferSummary>,
}

pub fn run(args: &TransferArgs, seed: u64, cfg: &SimConfig) -> Result<Report<TransferReportBody>> {
    let body = if let Some(n) = args.ranks {
        if !(2..=cfg.topology.total_ranks()).contains(&n) {
            return Err(dpusim::Error::RankCountOutOfRange(
                n,
                2,
                cfg.topology.total_ranks(),
            ));
        }
        let policy = parse_policy(&args.policy)?;
        let direction = parse_direction(&args.direction)?;
        let placement = parse_placement(&args.placement)?;
        let alloc = match policy {
            PolicyKind::BaselineSequential => AllocationPolicy::baseline(),
            PolicyKind::NumaChannelBalanced => AllocationPolicy::balanced(),
        };
        let set = allocate_ranks(n, &alloc, &cfg.topology)?;
        let gbps = estimate_throughput(&set, direction, placement, &cfg.transfer, &cfg.topology)?;
        TransferReportBody {
            points: vec![TransferPoint {
                ranks: n,
                policy,
                direction,
                gbps,
            }],
            summary: None,
        }
    } else {
        TransferReportBody {
            points: run_transfer_sweep(args.min_ranks, args.max_ranks, cfg)?,
            summary: Some(summarize_transfer(cfg)?),
        }
    };
    Ok(Report {
        command: "transfer",
        seed,
        calibration: *cfg,
        cases: body,
    })
}

fn policy_name(p: PolicyKind) -> &'static str {
    match p {
        PolicyKind::BaselineSequential => "baseline",
        PolicyKind::NumaChannelBalanced => "balanced",
    }
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::HostToPim => "host-to-pim",
        Direction::PimToHost => "pim-to-host",
    }
}

impl Render for TransferReportBody {
    fn table(&self, out: &mut String) {
        out.push_str(&format!(
            "{:>5} {:<9} {:<12} {:>9}\n",
            "ranks", "policy", "direction", "GB/s"
        ));
        for p in &self.points {
            out.push_str(&format!(
                "{:>5} {:<9} {:<12} {:>9}\n",
                p.ranks,
                policy_name(p.policy),
                direction_name(p.direction),
                fmt_f(p.gbps),
            ));
        }
        if let Some(s) = &self.summary {
            out.push_str(&format!(
                "\nbalanced/baseline: write peak {} avg {} (2-10 ranks), read peak {} avg {}, at 40 ranks write {} read {}\n",
                fmt_f(s.write_peak_ratio_2_10),
                fmt_f(s.write_avg_ratio_2_10),
                fmt_f(s.read_peak_ratio_2_10),
                fmt_f(s.read_avg_ratio_2_10),
                fmt_f(s.write_ratio_at_40),
                fmt_f(s.read_ratio_at_40),
            ));
        }
    }

    fn csv(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec![
            "ranks".into(),
            "policy".into(),
            "direction".into(),
            "gbps".into(),
        ]];
        for p in &self.points {
            rows.push(vec![
                p.ranks.to_string(),
                policy_name(p.policy).into(),
                direction_name(p.direction).into(),
                fmt_f(p.gbps),
            ]);
        }
        rows
    }
}
