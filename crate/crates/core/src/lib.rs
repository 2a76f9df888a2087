//! Desk-scale simulator of an UPMEM-style processing-in-memory server.
//!
//! The crate has three layers:
//!
//! * **Instruction level** ([`isa`], [`kernels`], [`bsdp`]) — a small subset of the
//!   DPU instruction set with two's-complement semantics, plus the integer
//!   multiply routines (`__mulsi3` shift-and-add, native byte multiplies,
//!   blocked loads, decomposed 32-bit multiply) and the bit-serial INT4 dot
//!   product. Every executed instruction is recorded in an [`isa::InstructionTrace`].
//! * **Cost level** ([`cycles`], [`transfer`]) — converts traces into cycles and
//!   tasklet-scaled MOPS, and models host<->PIM transfer throughput over a
//!   dual-socket NUMA topology under different rank-allocation policies.
//! * **Workload level** ([`gemv`]) — tiles GEMV across DPUs, runs it functionally
//!   at desk scale, and combines the cost models into timing estimates.
//!
//! All models are deterministic: identical inputs produce identical outputs.

pub mod bench;
pub mod bsdp;
pub mod config;
pub mod cycles;
pub mod datagen;
pub mod error;
pub mod gemv;
pub mod io;
pub mod isa;
pub mod kernels;
pub mod transfer;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
