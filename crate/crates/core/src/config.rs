//! Simulation configuration: topology, calibration, and benchmark
//! parameters, loadable from a TOML key/value file.
//!
//! Every section and key is optional; omitted values take the defaults
//! below. The defaults reproduce the reference machine: scalar choices set
//! the data-dependent `MUL_STEP` counts of the baseline multiply
//! benchmarks, and the transfer section carries the fitted bandwidth caps.
//!
//! ```toml
//! [pipeline]
//! stages = 14
//! saturation_tasklets = 11
//! max_tasklets = 16
//! frequency_hz = 400e6
//!
//! [memory]
//! iram_bytes = 24576
//! instruction_size_bytes = 6
//!
//! [topology]
//! sockets = 2
//! pim_channels_per_socket = 5
//! disabled_dpus = 9
//!
//! [transfer]
//! channel_cap_gbps = 19.2
//! host_write_agg_cap_gbps = 42.0
//! cross_numa_penalty = 0.7
//!
//! [bench]
//! int8_mul_scalar = 12
//! int32_mul_scalar = 3000000
//! arith_elements = 1048576
//! bsdp_elements = 1048576
//! ```

use crate::cycles::PipelineConfig;
use crate::isa::MemoryConfig;
use crate::transfer::{ServerTopology, TransferCalibration};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Benchmark inputs that are calibration, not measurement: the scalar
/// operands drive the data-dependent step counts of the shift-and-add
/// multiply (4 steps for the INT8 scalar, 22 for the INT32 scalar).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchParams {
    pub int8_add_scalar: i8,
    pub int8_mul_scalar: i8,
    pub int32_add_scalar: i32,
    pub int32_mul_scalar: i32,
    /// Elements in the arithmetic microbenchmark buffer.
    pub arith_elements: usize,
    /// Elements per vector in the dot-product benchmark (multiple of 32).
    pub bsdp_elements: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            int8_add_scalar: 3,
            int8_mul_scalar: 12,
            int32_add_scalar: 3,
            int32_mul_scalar: 3_000_000,
            arith_elements: 1 << 20,
            bsdp_elements: 1 << 20,
        }
    }
}

/// Full simulator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SimConfig {
    pub pipeline: PipelineConfig,
    pub memory: MemoryConfig,
    pub topology: ServerTopology,
    pub transfer: TransferCalibration,
    pub bench: BenchParams,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.transfer.validate()?;
        if self.memory.instruction_size_bytes == 0 {
            return Err(Error::Config("instruction size must be positive".into()));
        }
        if self.bench.arith_elements == 0 {
            return Err(Error::Config("arith buffer must be non-empty".into()));
        }
        if self.bench.bsdp_elements == 0 || !self.bench.bsdp_elements.is_multiple_of(32) {
            return Err(Error::Config(
                "bsdp vector length must be a positive multiple of 32".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad TOML: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}
