//! `bsdp`: bit-serial dot product against the native INT8 formulations.

use crate::report::{fmt_f, Render, Report};
use clap::Args;
use dpusim::bench::{run_bsdp_case, BsdpCase};
use dpusim::config::SimConfig;
use dpusim::isa::Signedness;
use dpusim::Result;
use serde::Serialize;

#[derive(Debug, Args)]
pub struct BsdpArgs {
    /// Vector length in elements (multiple of 32); defaults to the config.
    #[arg(long)]
    pub elements: Option<usize>,
    /// signed|unsigned|both
    #[arg(long, default_value = "both")]
    pub signedness: String,
}

#[derive(Debug, Serialize)]
pub struct BsdpReportBody {
    pub cases: Vec<BsdpCase>,
}

pub fn run(args: &BsdpArgs, seed: u64, cfg: &SimConfig) -> Result<Report<BsdpReportBody>> {
    let mut cfg = *cfg;
    if let Some(n) = args.elements {
        cfg.bench.bsdp_elements = n;
        cfg.validate()?;
    }
    let signs: Vec<Signedness> = match args.signedness.as_str() {
        "signed" => vec![Signedness::Signed],
        "unsigned" => vec![Signedness::Unsigned],
        "both" => vec![Signedness::Unsigned, Signedness::Signed],
        other => {
            return Err(dpusim::Error::InvalidCombination(format!(
                "unknown signedness '{other}'"
            )));
        }
    };
    let cases = signs
        .into_iter()
        .map(|s| run_bsdp_case(s, seed, &cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        command: "bsdp",
        seed,
        calibration: cfg,
        cases: BsdpReportBody { cases },
    })
}

impl Render for BsdpReportBody {
    fn table(&self, out: &mut String) {
        out.push_str(&format!(
            "{:<9} {:>9} {:>11} {:>11} {:>11} {:>9} {:>9} {:>7}\n",
            "sign", "elements", "bsdp MOPS", "base MOPS", "opt MOPS", "vs base", "vs opt", "oracle"
        ));
        for c in &self.cases {
            out.push_str(&format!(
                "{:<9} {:>9} {:>11} {:>11} {:>11} {:>9} {:>9} {:>7}\n",
                format!("{:?}", c.signedness).to_lowercase(),
                c.elements,
                fmt_f(c.bsdp_mops),
                fmt_f(c.baseline_mops),
                fmt_f(c.optimized_mops),
                fmt_f(c.speedup_vs_baseline),
                fmt_f(c.speedup_vs_optimized),
                if c.dot_ok { "pass" } else { "FAIL" },
            ));
        }
    }

    fn csv(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec![
            "signedness".into(),
            "kernel".into(),
            "cycles_per_element".into(),
            "mops".into(),
            "dot_ok".into(),
        ]];
        for c in &self.cases {
            let sign = format!("{:?}", c.signedness).to_lowercase();
            for (kernel, cyc, mops) in [
                ("bsdp", c.bsdp_cycles_per_element, c.bsdp_mops),
                (
                    "native_baseline",
                    c.baseline_cycles_per_element,
                    c.baseline_mops,
                ),
                (
                    "native_optimized",
                    c.optimized_cycles_per_element,
                    c.optimized_mops,
                ),
            ] {
                rows.push(vec![
                    sign.clone(),
                    kernel.into(),
                    fmt_f(cyc),
                    fmt_f(mops),
                    c.dot_ok.to_string(),
                ]);
            }
        }
        rows
    }
}

pub fn all_ok(body: &BsdpReportBody) -> bool {
    body.cases.iter().all(|c| c.dot_ok)
}
