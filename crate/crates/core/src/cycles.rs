//! Converts instruction traces into cycles and tasklet-scaled throughput.
//!
//! The pipeline is a revolver: a tasklet may issue at most one instruction
//! every `saturation_tasklets` cycles, so aggregate issue scales linearly up
//! to saturation and is flat beyond it. At saturation the DPU retires one
//! instruction per cycle, which makes cycle accounting equal to instruction
//! counting.

use crate::isa::InstructionTrace;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Pipeline geometry and clock of one DPU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub stages: u32,
    /// Tasklet count from which the pipeline issues every cycle.
    pub saturation_tasklets: u32,
    pub max_tasklets: u32,
    pub frequency_hz: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: 14,
            saturation_tasklets: 11,
            max_tasklets: 16,
            frequency_hz: 400e6,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.saturation_tasklets == 0 || self.saturation_tasklets > self.stages {
            return Err(Error::Config(format!(
                "saturation tasklets {} must be in 1..=stages ({})",
                self.saturation_tasklets, self.stages
            )));
        }
        if self.max_tasklets < self.saturation_tasklets {
            return Err(Error::Config(format!(
                "max tasklets {} below saturation {}",
                self.max_tasklets, self.saturation_tasklets
            )));
        }
        if self.frequency_hz <= 0.0 {
            return Err(Error::Config("frequency must be positive".into()));
        }
        Ok(())
    }
}

/// Loop-control cost and unroll factor for a kernel's element loop.
///
/// The effective control overhead per iteration is
/// `control_overhead_per_iteration / unroll_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopModel {
    pub control_overhead_per_iteration: u64,
    pub unroll_factor: u64,
}

impl Default for LoopModel {
    fn default() -> Self {
        LoopModel {
            control_overhead_per_iteration: 2,
            unroll_factor: 1,
        }
    }
}

impl LoopModel {
    pub fn effective_control_per_iteration(&self) -> f64 {
        self.control_overhead_per_iteration as f64 / self.unroll_factor as f64
    }
}

/// Tasklet-scaled throughput of one DPU for a given per-element cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub tasklets: u32,
    pub cycles_per_element: f64,
    pub mops: f64,
}

/// Cycles consumed by a trace: every modeled instruction issues in one slot.
pub fn cycles_of(trace: &InstructionTrace) -> u64 {
    trace.total_instructions()
}

/// Throughput in MOPS at a given tasklet count.
pub fn throughput_mops(
    per_element_cycles: f64,
    tasklets: u32,
    cfg: &PipelineConfig,
) -> Result<ThroughputReport> {
    if tasklets == 0 || tasklets > cfg.max_tasklets {
        return Err(Error::TaskletsOutOfRange(tasklets));
    }
    if per_element_cycles <= 0.0 {
        return Err(Error::NonPositiveCycles);
    }
    let issue_fraction =
        tasklets.min(cfg.saturation_tasklets) as f64 / cfg.saturation_tasklets as f64;
    let mops = cfg.frequency_hz * issue_fraction / per_element_cycles / 1e6;
    Ok(ThroughputReport {
        tasklets,
        cycles_per_element: per_element_cycles,
        mops,
    })
}

/// Ratio of optimized to baseline throughput for the same workload.
pub fn speedup(baseline: &ThroughputReport, optimized: &ThroughputReport) -> Result<f64> {
    if baseline.mops == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok(optimized.mops / baseline.mops)
}
