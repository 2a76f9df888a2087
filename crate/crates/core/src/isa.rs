//! DPU machine words, the instruction subset used by the kernels, and
//! instruction tracing.
//!
//! The DPU is an in-order 32-bit RISC core. Arithmetic is defined modulo
//! 2^32; signed and unsigned views reinterpret the same bits. Each modeled
//! instruction issues in a single pipeline slot, so cycle accounting reduces
//! to counting trace entries (see [`crate::cycles`]).

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A 32-bit machine word. All kernel arithmetic wraps modulo 2^32.
pub type Word32 = u32;

/// A 64-bit value as seen by 64-bit loads (a register pair).
pub type Word64 = u64;

/// An even/odd register pair (`d0` = `r0`/`r1` in DPU assembly).
///
/// `MUL_STEP` keeps the multiplier in `low` and the accumulator in `high`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegisterPair {
    pub low: Word32,
    pub high: Word32,
}

/// The instruction subset the kernels are built from.
///
/// Every opcode costs one issue slot; memory-wait effects are outside the
/// timed region modeled here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opcode {
    Add,
    And,
    Xor,
    Lsl,
    Lsr,
    LslAdd,
    Cao,
    MulSlSl,
    MulShSl,
    MulSlSh,
    MulShSh,
    MulStep,
    Move,
    Load8,
    Load32,
    Load64,
    Store8,
    Store32,
    Store64,
    Jump,
    CondJump,
}

impl Opcode {
    pub const ALL: [Opcode; 21] = [
        Opcode::Add,
        Opcode::And,
        Opcode::Xor,
        Opcode::Lsl,
        Opcode::Lsr,
        Opcode::LslAdd,
        Opcode::Cao,
        Opcode::MulSlSl,
        Opcode::MulShSl,
        Opcode::MulSlSh,
        Opcode::MulShSh,
        Opcode::MulStep,
        Opcode::Move,
        Opcode::Load8,
        Opcode::Load32,
        Opcode::Load64,
        Opcode::Store8,
        Opcode::Store32,
        Opcode::Store64,
        Opcode::Jump,
        Opcode::CondJump,
    ];

    fn index(self) -> usize {
        Self::ALL.iter().position(|&op| op == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::And => "and",
            Opcode::Xor => "xor",
            Opcode::Lsl => "lsl",
            Opcode::Lsr => "lsr",
            Opcode::LslAdd => "lsl_add",
            Opcode::Cao => "cao",
            Opcode::MulSlSl => "mul_sl_sl",
            Opcode::MulShSl => "mul_sh_sl",
            Opcode::MulSlSh => "mul_sl_sh",
            Opcode::MulShSh => "mul_sh_sh",
            Opcode::MulStep => "mul_step",
            Opcode::Move => "move",
            Opcode::Load8 => "load8",
            Opcode::Load32 => "load32",
            Opcode::Load64 => "load64",
            Opcode::Store8 => "store8",
            Opcode::Store32 => "store32",
            Opcode::Store64 => "store64",
            Opcode::Jump => "jump",
            Opcode::CondJump => "cond_jump",
        }
    }
}

/// ALU operations with plain two-operand semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AluOp {
    Add,
    And,
    Xor,
    Lsl,
    Lsr,
    /// Returns the second operand (register-to-register move).
    Move,
}

/// Which 8-bit field of each operand a byte multiply reads.
///
/// `Sl` selects bits 0..=7 and `Sh` bits 16..=23; the remaining byte lanes
/// of a word are reached with an 8-bit shift between uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulByteVariant {
    SlSl,
    ShSl,
    SlSh,
    ShSh,
}

impl MulByteVariant {
    pub fn opcode(self) -> Opcode {
        match self {
            MulByteVariant::SlSl => Opcode::MulSlSl,
            MulByteVariant::ShSl => Opcode::MulShSl,
            MulByteVariant::SlSh => Opcode::MulSlSh,
            MulByteVariant::ShSh => Opcode::MulShSh,
        }
    }
}

/// Sign treatment for byte multiplies and 4-bit vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signedness {
    Signed,
    Unsigned,
}

/// Per-class record of executed instructions.
///
/// Entries are aggregated per opcode; `total_instructions` equals the sum of
/// all counts and never decreases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionTrace {
    counts: [u64; Opcode::ALL.len()],
    total: u64,
}

impl Default for InstructionTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl InstructionTrace {
    pub fn new() -> Self {
        InstructionTrace {
            counts: [0; Opcode::ALL.len()],
            total: 0,
        }
    }

    /// Records one executed instruction.
    pub fn record(&mut self, op: Opcode) {
        self.counts[op.index()] += 1;
        self.total += 1;
    }

    /// Records `n` executions of the same opcode.
    pub fn record_n(&mut self, op: Opcode, n: u64) {
        self.counts[op.index()] += n;
        self.total += n;
    }

    /// Merges another trace into this one.
    pub fn absorb(&mut self, other: &InstructionTrace) {
        for (dst, src) in self.counts.iter_mut().zip(other.counts.iter()) {
            *dst += src;
        }
        self.total += other.total;
    }

    pub fn count_of(&self, op: Opcode) -> u64 {
        self.counts[op.index()]
    }

    pub fn total_instructions(&self) -> u64 {
        self.total
    }

    /// Non-zero (opcode, count) entries in fixed opcode order.
    pub fn entries(&self) -> impl Iterator<Item = (Opcode, u64)> + '_ {
        Opcode::ALL
            .iter()
            .zip(self.counts.iter())
            .filter(|(_, &c)| c > 0)
            .map(|(&op, &c)| (op, c))
    }
}

/// DPU memory sizes. IRAM capacity bounds how far a loop can be unrolled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MemoryConfig {
    pub mram_bytes: u64,
    pub wram_bytes: u64,
    pub iram_bytes: u64,
    /// Encoded instruction size; the ISA documents a 24 KB IRAM but not the
    /// encoding width, so this is a parameter.
    pub instruction_size_bytes: u64,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig {
            mram_bytes: 64 * 1024 * 1024,
            wram_bytes: 64 * 1024,
            iram_bytes: 24 * 1024,
            instruction_size_bytes: 6,
        }
    }
}

impl MemoryConfig {
    pub fn iram_capacity_instructions(&self) -> u64 {
        self.iram_bytes / self.instruction_size_bytes
    }
}

/// True iff a kernel of `instruction_count` encoded instructions links into IRAM.
pub fn check_iram_fit(instruction_count: u64, cfg: &MemoryConfig) -> bool {
    instruction_count <= cfg.iram_capacity_instructions()
}

fn check_shift(shift: u32) -> Result<()> {
    if shift > 31 {
        Err(Error::ShiftOutOfRange(shift))
    } else {
        Ok(())
    }
}

/// Selects the byte field a multiply variant reads from a word.
fn byte_field(word: Word32, high: bool) -> u8 {
    if high {
        (word >> 16) as u8
    } else {
        word as u8
    }
}

/// A single-owner DPU execution context: executes instructions and traces them.
///
/// Instances are independent; callers may run any number of machines
/// concurrently. Buffers live on the caller's side (WRAM and MRAM are flat
/// byte arrays without timing), so the machine itself only carries the trace.
#[derive(Debug, Default, Clone)]
pub struct Machine {
    trace: InstructionTrace,
}

impl Machine {
    pub fn new() -> Self {
        Machine::default()
    }

    pub fn trace(&self) -> &InstructionTrace {
        &self.trace
    }

    pub fn into_trace(self) -> InstructionTrace {
        self.trace
    }

    /// Executes a plain ALU instruction. `b` doubles as the immediate for
    /// shifts; `Move` returns `b`.
    pub fn alu(&mut self, op: AluOp, a: Word32, b: Word32) -> Result<Word32> {
        let (opcode, value) = match op {
            AluOp::Add => (Opcode::Add, a.wrapping_add(b)),
            AluOp::And => (Opcode::And, a & b),
            AluOp::Xor => (Opcode::Xor, a ^ b),
            AluOp::Lsl => {
                check_shift(b)?;
                (Opcode::Lsl, a << b)
            }
            AluOp::Lsr => {
                check_shift(b)?;
                (Opcode::Lsr, a >> b)
            }
            AluOp::Move => (Opcode::Move, b),
        };
        self.trace.record(opcode);
        Ok(value)
    }

    /// Fused shift-and-accumulate: `acc + (src << shift)` in one slot.
    pub fn lsl_add(&mut self, acc: Word32, src: Word32, shift: u32) -> Result<Word32> {
        check_shift(shift)?;
        self.trace.record(Opcode::LslAdd);
        Ok(acc.wrapping_add(src << shift))
    }

    /// Population count of a 32-bit register (`cao`).
    pub fn cao(&mut self, a: Word32) -> Word32 {
        self.trace.record(Opcode::Cao);
        a.count_ones()
    }

    /// Multiplies the selected 8-bit fields of `a` and `b`, widened into a word.
    pub fn mul_byte(
        &mut self,
        variant: MulByteVariant,
        signedness: Signedness,
        a: Word32,
        b: Word32,
    ) -> Word32 {
        self.trace.record(variant.opcode());
        let (a_high, b_high) = match variant {
            MulByteVariant::SlSl => (false, false),
            MulByteVariant::ShSl => (true, false),
            MulByteVariant::SlSh => (false, true),
            MulByteVariant::ShSh => (true, true),
        };
        let x = byte_field(a, a_high);
        let y = byte_field(b, b_high);
        match signedness {
            Signedness::Unsigned => (x as u32).wrapping_mul(y as u32),
            Signedness::Signed => ((x as i8 as i32).wrapping_mul(y as i8 as i32)) as u32,
        }
    }

    /// One `MUL_STEP`: test the multiplier LSB, conditionally accumulate the
    /// shifted multiplicand, then shift the multiplier right.
    ///
    /// `exited` reports the `z` condition: the post-shift multiplier is zero,
    /// so a chained sequence stops early.
    pub fn mul_step(
        &mut self,
        state: RegisterPair,
        multiplicand: Word32,
        shift: u32,
    ) -> Result<(RegisterPair, bool)> {
        check_shift(shift)?;
        self.trace.record(Opcode::MulStep);
        let mut next = state;
        if state.low & 1 == 1 {
            next.high = next.high.wrapping_add(multiplicand << shift);
        }
        next.low >>= 1;
        Ok((next, next.low == 0))
    }

    /// Charges one issue slot for `op` without modeling its data. Used for
    /// loop control and address arithmetic whose values the simulation
    /// tracks natively.
    pub fn record(&mut self, op: Opcode) {
        self.trace.record(op);
    }

    // Memory and control instructions only contribute cost; data movement
    // happens on the caller's buffers.

    pub fn load8(&mut self) {
        self.trace.record(Opcode::Load8);
    }

    pub fn load32(&mut self) {
        self.trace.record(Opcode::Load32);
    }

    pub fn load64(&mut self) {
        self.trace.record(Opcode::Load64);
    }

    pub fn store8(&mut self) {
        self.trace.record(Opcode::Store8);
    }

    pub fn store32(&mut self) {
        self.trace.record(Opcode::Store32);
    }

    pub fn store64(&mut self) {
        self.trace.record(Opcode::Store64);
    }

    pub fn jump(&mut self) {
        self.trace.record(Opcode::Jump);
    }

    pub fn cond_jump(&mut self) {
        self.trace.record(Opcode::CondJump);
    }

    pub fn mov(&mut self) {
        self.trace.record(Opcode::Move);
    }
}
