//! Integer arithmetic kernels expressed as instruction streams over [`crate::isa`].
//!
//! Covers the compiler's `__mulsi3` shift-and-add routine, single-instruction
//! byte multiplies, blocked variants that amortize loads over 32/64-bit
//! words, the decomposed 32-bit multiply built from unsigned byte products,
//! INT8 dot products, and the buffer-update microkernel used by the
//! arithmetic benchmarks. All kernels are pure: outputs and traces depend
//! only on the inputs.

use crate::isa::{
    check_iram_fit, AluOp, Machine, MemoryConfig, MulByteVariant, Opcode, RegisterPair, Signedness,
    Word32, Word64,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard bound on `MUL_STEP` instructions in one `__mulsi3` invocation.
pub const MULSI3_MAX_STEPS: u64 = 32;

/// Encoded size of the shared `__mulsi3` routine: the compare, four moves,
/// and the 32 `mul_step` slots.
pub const MULSI3_STATIC_INSTRUCTIONS: u64 = 37;

/// Encoded size of the decomposed multiply with both sign paths laid out.
pub const DIM_STATIC_INSTRUCTIONS: u64 = 48;

/// Bytes processed per staged WRAM block in the update microkernel.
pub const BLOCK_SIZE_BYTES: usize = 1024;

/// Output words plus the instruction trace that produced them.
#[derive(Debug, Clone)]
pub struct KernelResult {
    pub outputs: Vec<Word32>,
    pub trace: crate::isa::InstructionTrace,
}

/// Byte-level decomposition of a word's absolute value.
///
/// `bytes[0]` is least significant; recomposing the bytes yields the
/// wrapping negation of the source when `negative` is set, so `INT32_MIN`
/// stays representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteDecomposition {
    pub bytes: [u8; 4],
    pub negative: bool,
}

/// Decomposes `v` into the byte components of its wrapping absolute value.
pub fn decompose_abs(v: Word32) -> ByteDecomposition {
    let negative = (v as i32) < 0;
    let abs = if negative { v.wrapping_neg() } else { v };
    ByteDecomposition {
        bytes: abs.to_le_bytes(),
        negative,
    }
}

/// Emits the `__mulsi3` routine body on an existing machine and returns the
/// product. The multiplier ends up as the unsigned-smaller operand (the
/// decompiled routine swaps on an unsigned compare), and the step chain
/// exits as soon as the post-shift multiplier reaches zero.
fn emit_mulsi3(m: &mut Machine, a: Word32, b: Word32) -> Word32 {
    m.cond_jump(); // jgtu: pick the swap path
    let (multiplicand, multiplier) = if a < b { (b, a) } else { (a, b) };
    m.mov(); // place multiplicand in r2
    m.mov(); // place multiplier in d0.low
    m.mov(); // zero the accumulator, d0.high
    let mut state = RegisterPair {
        low: multiplier,
        high: 0,
    };
    for shift in 0..32 {
        let (next, exited) = m
            .mul_step(state, multiplicand, shift)
            .expect("shift stays in range");
        state = next;
        if exited {
            break;
        }
    }
    m.mov(); // move the result out of d0.high
    state.high
}

/// Shift-and-add 32-bit multiply via chained `MUL_STEP`, as the runtime
/// library performs it. The result is exact modulo 2^32 for any sign mix.
pub fn mulsi3(a: Word32, b: Word32) -> KernelResult {
    let mut m = Machine::new();
    let product = emit_mulsi3(&mut m, a, b);
    KernelResult {
        outputs: vec![product],
        trace: m.into_trace(),
    }
}

/// Single-instruction INT8 multiply: one signed low-byte multiply, result
/// sign-extended into a word.
pub fn mul_int8_native(a: i8, b: i8) -> KernelResult {
    let mut m = Machine::new();
    let out = m.mul_byte(
        MulByteVariant::SlSl,
        Signedness::Signed,
        a as u8 as Word32,
        b as u8 as Word32,
    );
    KernelResult {
        outputs: vec![out],
        trace: m.into_trace(),
    }
}

/// Load width for the blocked INT8 multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockWidth {
    X4,
    X8,
}

/// Multiplies the four packed bytes of `word` by `scalar`, storing each
/// truncated product. Two byte fields are reachable directly and two after
/// an 8-bit shift: four multiplies, four stores, one shift.
fn emit_byte_quad_mul(m: &mut Machine, word: Word32, scalar: Word32) -> [u8; 4] {
    let mut out = [0u8; 4];
    out[0] = m.mul_byte(MulByteVariant::SlSl, Signedness::Signed, word, scalar) as u8;
    m.store8();
    out[2] = m.mul_byte(MulByteVariant::ShSl, Signedness::Signed, word, scalar) as u8;
    m.store8();
    let shifted = m.alu(AluOp::Lsr, word, 8).expect("fixed shift");
    out[1] = m.mul_byte(MulByteVariant::SlSl, Signedness::Signed, shifted, scalar) as u8;
    m.store8();
    out[3] = m.mul_byte(MulByteVariant::ShSl, Signedness::Signed, shifted, scalar) as u8;
    m.store8();
    out
}

/// Multiplies eight packed INT8 values by a scalar, loading the block in
/// 32-bit (`X4`) or 64-bit (`X8`) units. Outputs are the two updated words.
pub fn mul_int8_blocked(block: Word64, scalar: i8, width: BlockWidth) -> KernelResult {
    let mut m = Machine::new();
    let scalar_w = scalar as u8 as Word32;
    let lo = block as Word32;
    let hi = (block >> 32) as Word32;
    let (lo_out, hi_out) = match width {
        BlockWidth::X8 => {
            m.load64();
            let l = emit_byte_quad_mul(&mut m, lo, scalar_w);
            let h = emit_byte_quad_mul(&mut m, hi, scalar_w);
            (l, h)
        }
        BlockWidth::X4 => {
            m.load32();
            let l = emit_byte_quad_mul(&mut m, lo, scalar_w);
            m.load32();
            let h = emit_byte_quad_mul(&mut m, hi, scalar_w);
            (l, h)
        }
    };
    KernelResult {
        outputs: vec![u32::from_le_bytes(lo_out), u32::from_le_bytes(hi_out)],
        trace: m.into_trace(),
    }
}

/// Emits the decomposed 32-bit multiply and returns the product.
///
/// The problem is reduced to `a * |b|` with raw two's-complement bytes on
/// the `a` side, so only one operand needs sign handling: branch on the
/// sign of `b`, negate it on the taken path, run the ten unsigned byte
/// products with shifted accumulation, and negate the product on the way
/// out. Worst case executes 26 instructions, the common path 23.
fn emit_dim(m: &mut Machine, a: Word32, b: Word32) -> Word32 {
    m.cond_jump(); // branch on the sign of b
    let b_negative = (b as i32) < 0;
    let b_abs = if b_negative {
        let inverted = m.alu(AluOp::Xor, b, 0xFFFF_FFFF).expect("no shift");
        m.alu(AluOp::Add, inverted, 1).expect("no shift")
    } else {
        b
    };

    // One 8-bit shift per operand exposes all four byte fields.
    let a8 = m.alu(AluOp::Lsr, a, 8).expect("fixed shift");
    let b8 = m.alu(AluOp::Lsr, b_abs, 8).expect("fixed shift");

    use MulByteVariant::{ShSl, SlSh, SlSl};
    let u = Signedness::Unsigned;
    // Partial products x_i * y_j for i + j <= 3; terms at 2^32 and beyond
    // vanish under wrapping.
    let mut acc = m.mul_byte(SlSl, u, a, b_abs); // x0*y0
    let p01 = m.mul_byte(SlSl, u, a, b8); // x0*y1
    let p10 = m.mul_byte(SlSl, u, a8, b_abs); // x1*y0
    let p02 = m.mul_byte(SlSh, u, a, b_abs); // x0*y2
    let p11 = m.mul_byte(SlSl, u, a8, b8); // x1*y1
    let p20 = m.mul_byte(ShSl, u, a, b_abs); // x2*y0
    let p03 = m.mul_byte(SlSh, u, a, b8); // x0*y3
    let p12 = m.mul_byte(SlSh, u, a8, b_abs); // x1*y2
    let p21 = m.mul_byte(ShSl, u, a, b8); // x2*y1
    let p30 = m.mul_byte(ShSl, u, a8, b_abs); // x3*y0

    for (p, shift) in [
        (p01, 8),
        (p10, 8),
        (p02, 16),
        (p11, 16),
        (p20, 16),
        (p03, 24),
        (p12, 24),
        (p21, 24),
        (p30, 24),
    ] {
        acc = m.lsl_add(acc, p, shift).expect("fixed shift");
    }

    if b_negative {
        let inverted = m.alu(AluOp::Xor, acc, 0xFFFF_FFFF).expect("no shift");
        m.alu(AluOp::Add, inverted, 1).expect("no shift")
    } else {
        m.jump(); // skip the negation epilogue
        acc
    }
}

/// Decomposed 32-bit multiply: byte-level partial products combined with
/// fused shift-adds instead of a 32-step `MUL_STEP` chain.
pub fn dim_mul_int32(a: Word32, b: Word32) -> KernelResult {
    let mut m = Machine::new();
    let product = emit_dim(&mut m, a, b);
    KernelResult {
        outputs: vec![product],
        trace: m.into_trace(),
    }
}

/// Byte-at-a-time INT8 dot product: per element, two loads, one byte
/// multiply, one accumulate, plus loop control.
pub fn int8_dot_baseline(a: &[i8], b: &[i8], signedness: Signedness) -> Result<KernelResult> {
    if a.len() != b.len() {
        return Err(Error::OperandMismatch(format!(
            "dot operand lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut m = Machine::new();
    let mut acc: Word32 = 0;
    for (&x, &y) in a.iter().zip(b) {
        m.load8();
        m.load8();
        let p = m.mul_byte(
            MulByteVariant::SlSl,
            signedness,
            x as u8 as Word32,
            y as u8 as Word32,
        );
        acc = m.alu(AluOp::Add, acc, p)?;
        m.record(Opcode::Add); // index increment
        m.cond_jump(); // loop branch
    }
    Ok(KernelResult {
        outputs: vec![acc],
        trace: m.into_trace(),
    })
}

/// Accumulates the four per-lane byte products of one word pair.
fn emit_dot_quad(m: &mut Machine, xw: Word32, yw: Word32, sign: Signedness, acc: Word32) -> Word32 {
    use MulByteVariant::{ShSh, SlSl};
    let mut acc = acc;
    let p = m.mul_byte(SlSl, sign, xw, yw);
    acc = m.alu(AluOp::Add, acc, p).expect("no shift");
    let p = m.mul_byte(ShSh, sign, xw, yw);
    acc = m.alu(AluOp::Add, acc, p).expect("no shift");
    let xs = m.alu(AluOp::Lsr, xw, 8).expect("fixed shift");
    let ys = m.alu(AluOp::Lsr, yw, 8).expect("fixed shift");
    let p = m.mul_byte(SlSl, sign, xs, ys);
    acc = m.alu(AluOp::Add, acc, p).expect("no shift");
    let p = m.mul_byte(ShSh, sign, xs, ys);
    m.alu(AluOp::Add, acc, p).expect("no shift")
}

/// Blocked INT8 dot product: 64-bit loads for both operands, byte-field
/// multiplies with one 8-bit shift per word, fully unrolled. 22 instructions
/// per 8 elements; a tail shorter than 8 falls back to per-element form.
pub fn int8_dot_blocked(a: &[i8], b: &[i8], signedness: Signedness) -> Result<KernelResult> {
    if a.len() != b.len() {
        return Err(Error::OperandMismatch(format!(
            "dot operand lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut m = Machine::new();
    let mut acc: Word32 = 0;
    let mut chunks_a = a.chunks_exact(8);
    let mut chunks_b = b.chunks_exact(8);
    for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
        m.load64();
        m.load64();
        let xw = |i: usize| -> Word32 {
            u32::from_le_bytes([
                ca[i] as u8,
                ca[i + 1] as u8,
                ca[i + 2] as u8,
                ca[i + 3] as u8,
            ])
        };
        let yw = |i: usize| -> Word32 {
            u32::from_le_bytes([
                cb[i] as u8,
                cb[i + 1] as u8,
                cb[i + 2] as u8,
                cb[i + 3] as u8,
            ])
        };
        acc = emit_dot_quad(&mut m, xw(0), yw(0), signedness, acc);
        acc = emit_dot_quad(&mut m, xw(4), yw(4), signedness, acc);
    }
    for (&x, &y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        m.load8();
        m.load8();
        let p = m.mul_byte(
            MulByteVariant::SlSl,
            signedness,
            x as u8 as Word32,
            y as u8 as Word32,
        );
        acc = m.alu(AluOp::Add, acc, p)?;
    }
    Ok(KernelResult {
        outputs: vec![acc],
        trace: m.into_trace(),
    })
}

/// Element type of the update microkernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DType {
    Int8,
    Int32,
}

impl DType {
    pub fn element_bytes(self) -> usize {
        match self {
            DType::Int8 => 1,
            DType::Int32 => 4,
        }
    }

    /// Loop-control instructions per iteration of the element loop.
    pub fn control_instructions(self) -> u64 {
        match self {
            DType::Int8 => 2,
            DType::Int32 => 3,
        }
    }
}

/// Scalar operation applied by the update microkernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Mul,
}

/// Code-generation variant of the update microkernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Compiler default: multiplies call `__mulsi3`.
    Baseline,
    /// Native byte-multiply instruction instead of the library call.
    Ni,
    /// Native instruction with 32-bit block loads.
    NiX4,
    /// Native instruction with 64-bit block loads.
    NiX8,
    /// Decomposed 32-bit multiply.
    Dim,
}

/// Unroll request for the element loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unroll {
    One,
    X64,
    X128,
    /// Full unrolling, bounded by what fits in IRAM.
    Auto,
}

/// Buffer and scalar operands for [`update_microkernel`].
#[derive(Debug, Clone, Copy)]
pub enum UpdateInput<'a> {
    Int8 { buffer: &'a [i8], scalar: i8 },
    Int32 { buffer: &'a [i32], scalar: i32 },
}

impl UpdateInput<'_> {
    pub fn dtype(&self) -> DType {
        match self {
            UpdateInput::Int8 { .. } => DType::Int8,
            UpdateInput::Int32 { .. } => DType::Int32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            UpdateInput::Int8 { buffer, .. } => buffer.len(),
            UpdateInput::Int32 { buffer, .. } => buffer.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Elements consumed per loop iteration for a variant.
pub fn iteration_width(variant: Variant) -> usize {
    match variant {
        Variant::NiX4 => 4,
        Variant::NiX8 => 8,
        _ => 1,
    }
}

/// Encoded instructions per unrolled iteration, and the extra shared
/// footprint (loop skeleton plus any out-of-line routine).
fn static_cost(dtype: DType, op: ArithOp, variant: Variant) -> (u64, u64) {
    let ctrl = dtype.control_instructions();
    match (op, variant) {
        (ArithOp::Add, _) | (ArithOp::Mul, Variant::Ni) => (3, ctrl),
        // Call site is load/jump/store; the routine is shared.
        (ArithOp::Mul, Variant::Baseline) => (3, ctrl + MULSI3_STATIC_INSTRUCTIONS),
        (ArithOp::Mul, Variant::NiX4) => (10, ctrl),
        (ArithOp::Mul, Variant::NiX8) => (19, ctrl),
        // Both sign paths of the decomposed multiply are laid out inline.
        (ArithOp::Mul, Variant::Dim) => (2 + DIM_STATIC_INSTRUCTIONS, ctrl),
    }
}

fn validate_combination(dtype: DType, op: ArithOp, variant: Variant) -> Result<()> {
    let ok = matches!(
        (dtype, op, variant),
        (_, ArithOp::Add, Variant::Baseline)
            | (DType::Int8, ArithOp::Mul, Variant::Baseline)
            | (DType::Int8, ArithOp::Mul, Variant::Ni)
            | (DType::Int8, ArithOp::Mul, Variant::NiX4)
            | (DType::Int8, ArithOp::Mul, Variant::NiX8)
            | (DType::Int32, ArithOp::Mul, Variant::Baseline)
            | (DType::Int32, ArithOp::Mul, Variant::Dim)
    );
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidCombination(format!(
            "{dtype:?} {op:?} {variant:?}"
        )))
    }
}

/// Resolves an unroll request against the iteration count of one staged
/// block and the IRAM budget. Explicit factors that do not link are an
/// error; `Auto` backs off to the largest factor that fits.
pub fn resolve_unroll(
    unroll: Unroll,
    iterations_per_block: u64,
    dtype: DType,
    op: ArithOp,
    variant: Variant,
    cfg: &MemoryConfig,
) -> Result<u64> {
    let (per_iter, shared) = static_cost(dtype, op, variant);
    let capacity = cfg.iram_capacity_instructions();
    let fits = |factor: u64| check_iram_fit(factor * per_iter + shared, cfg);
    match unroll {
        Unroll::One => Ok(1),
        Unroll::X64 | Unroll::X128 => {
            let factor = match unroll {
                Unroll::X64 => 64,
                _ => 128,
            }
            .min(iterations_per_block);
            if fits(factor) {
                Ok(factor)
            } else {
                Err(Error::IramOverfill {
                    needed: factor * per_iter + shared,
                    capacity,
                })
            }
        }
        Unroll::Auto => {
            let full = iterations_per_block;
            if fits(full) {
                return Ok(full);
            }
            let bound = (capacity.saturating_sub(shared)) / per_iter;
            if bound == 0 {
                return Err(Error::IramOverfill {
                    needed: per_iter + shared,
                    capacity,
                });
            }
            Ok(bound.min(full))
        }
    }
}

fn emit_control(m: &mut Machine, dtype: DType) {
    for _ in 0..dtype.control_instructions() - 1 {
        m.record(Opcode::Add);
    }
    m.cond_jump();
}

/// Element-wise `buffer op= scalar` over staged 1024-byte blocks.
///
/// The instruction stream matches the selected variant: per-element loads
/// and stores for scalar code, block loads for `NiX4`/`NiX8`, the
/// `__mulsi3` call for baseline multiplies, and the decomposed multiply for
/// `Dim`. Loop control is charged once per unroll group. INT8 outputs are
/// returned one element per word (zero-extended byte).
pub fn update_microkernel(
    input: UpdateInput<'_>,
    op: ArithOp,
    variant: Variant,
    unroll: Unroll,
    cfg: &MemoryConfig,
) -> Result<KernelResult> {
    let dtype = input.dtype();
    validate_combination(dtype, op, variant)?;
    let width = iteration_width(variant);
    if input.is_empty() || !input.len().is_multiple_of(width) {
        return Err(Error::ShapeMismatch(format!(
            "buffer length {} must be a positive multiple of {width}",
            input.len()
        )));
    }
    let block_elems = BLOCK_SIZE_BYTES / dtype.element_bytes();
    let iters_per_block = (block_elems / width) as u64;
    let factor = resolve_unroll(unroll, iters_per_block, dtype, op, variant, cfg)?;

    let mut m = Machine::new();
    let mut outputs = Vec::with_capacity(input.len());

    match input {
        UpdateInput::Int8 { buffer, scalar } => {
            for block in buffer.chunks(block_elems) {
                let iters = (block.len() / width) as u64;
                for (i, chunk) in block.chunks(width).enumerate() {
                    match variant {
                        Variant::Baseline | Variant::Ni => {
                            let x = chunk[0];
                            m.load8();
                            let out = match op {
                                ArithOp::Add => {
                                    m.alu(AluOp::Add, x as u8 as Word32, scalar as u8 as Word32)?
                                        as u8
                                }
                                ArithOp::Mul => match variant {
                                    Variant::Baseline => {
                                        // The compiler emits a call; byte
                                        // operands reach the routine
                                        // zero-extended.
                                        m.jump();
                                        emit_mulsi3(
                                            &mut m,
                                            x as u8 as Word32,
                                            scalar as u8 as Word32,
                                        ) as u8
                                    }
                                    _ => m.mul_byte(
                                        MulByteVariant::SlSl,
                                        Signedness::Signed,
                                        x as u8 as Word32,
                                        scalar as u8 as Word32,
                                    ) as u8,
                                },
                            };
                            m.store8();
                            outputs.push(out as Word32);
                        }
                        Variant::NiX4 | Variant::NiX8 => {
                            // One amortized load per word (or word pair).
                            if variant == Variant::NiX8 {
                                m.load64();
                            } else {
                                m.load32();
                            }
                            for word_bytes in chunk.chunks(4) {
                                let w = u32::from_le_bytes([
                                    word_bytes[0] as u8,
                                    word_bytes[1] as u8,
                                    word_bytes[2] as u8,
                                    word_bytes[3] as u8,
                                ]);
                                let quad = emit_byte_quad_mul(&mut m, w, scalar as u8 as Word32);
                                outputs.extend(quad.iter().map(|&v| v as Word32));
                            }
                        }
                        Variant::Dim => unreachable!("rejected by validate_combination"),
                    }
                    let is_group_end = (i as u64 + 1).is_multiple_of(factor);
                    if factor < iters && is_group_end {
                        emit_control(&mut m, dtype);
                    }
                }
                if factor < iters && !iters.is_multiple_of(factor) {
                    emit_control(&mut m, dtype);
                }
            }
        }
        UpdateInput::Int32 { buffer, scalar } => {
            for block in buffer.chunks(block_elems) {
                let iters = block.len() as u64;
                for (i, &x) in block.iter().enumerate() {
                    m.load32();
                    let out = match (op, variant) {
                        (ArithOp::Add, _) => m.alu(AluOp::Add, x as Word32, scalar as Word32)?,
                        (ArithOp::Mul, Variant::Baseline) => {
                            m.jump();
                            emit_mulsi3(&mut m, x as Word32, scalar as Word32)
                        }
                        (ArithOp::Mul, Variant::Dim) => {
                            emit_dim(&mut m, x as Word32, scalar as Word32)
                        }
                        _ => unreachable!("rejected by validate_combination"),
                    };
                    m.store32();
                    outputs.push(out);
                    let is_group_end = (i as u64 + 1).is_multiple_of(factor);
                    if factor < iters && is_group_end {
                        emit_control(&mut m, dtype);
                    }
                }
                if factor < iters && !iters.is_multiple_of(factor) {
                    emit_control(&mut m, dtype);
                }
            }
        }
    }

    Ok(KernelResult {
        outputs,
        trace: m.into_trace(),
    })
}
