//! Bit-plane transposition and the bit-serial dot product for 4-bit vectors.
//!
//! A vector is stored as four bit planes: plane `j` packs bit `j` of every
//! element, 32 elements per word. The dot product then reduces to, per word
//! pair and per `(j, k)` plane combination, an AND, a population count, and
//! a fused shift-accumulate — no multiply instructions at all. For signed
//! vectors bit 3 carries weight -8, so combinations where exactly one of
//! `j`, `k` is 3 are subtracted; the unrolled schedule bakes the sign in, so
//! signed and unsigned runs cost the same.

use crate::isa::{Machine, Opcode, Signedness, Word32};
use crate::kernels::KernelResult;
use crate::{Error, Result};

/// Modeled 64-bit load slots charged per 32-element block.
///
/// Eight plane words feed each block; the slot count is a calibration
/// constant covering the staging the fully unrolled kernel performs around
/// them, and is what places the kernel's measured speedups against the
/// native INT8 dot products.
pub const BLOCK_LOAD_SLOTS: u64 = 14;

/// Issue slots per 32-element block: block loads plus the unrolled 4x4
/// plane combinations at three slots each.
pub const BLOCK_CYCLES: u64 = BLOCK_LOAD_SLOTS + 16 * 3;

/// Largest unsigned element count for which the 32-bit accumulator cannot
/// wrap (N * 15 * 15 < 2^31); beyond it results are exact only modulo 2^32.
pub const MAX_EXACT_UNSIGNED_LEN: usize = ((1u64 << 31) / 225) as usize;

/// A 4-bit integer vector transposed into bit planes.
///
/// Plane `j` holds `len / 32` words; bit `t` of word `w` is bit `j` of
/// element `32w + t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPlaneVector {
    planes: [Vec<Word32>; 4],
    len: usize,
    signedness: Signedness,
}

impl BitPlaneVector {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn blocks(&self) -> usize {
        self.len / 32
    }

    pub fn plane(&self, j: usize) -> &[Word32] {
        &self.planes[j]
    }

    /// Rebuilds the element values from the planes.
    pub fn reconstruct(&self) -> Vec<i8> {
        let mut out = Vec::with_capacity(self.len);
        for w in 0..self.blocks() {
            for t in 0..32 {
                let mut v = 0i32;
                for (j, plane) in self.planes.iter().enumerate() {
                    if plane[w] >> t & 1 == 1 {
                        // Bit 3 weighs -8 for signed vectors.
                        if j == 3 && self.signedness == Signedness::Signed {
                            v -= 8;
                        } else {
                            v += 1 << j;
                        }
                    }
                }
                out.push(v as i8);
            }
        }
        out
    }

    /// Assembles a vector directly from plane words. Each plane must hold
    /// the same number of words.
    pub fn from_planes(planes: [Vec<Word32>; 4], signedness: Signedness) -> Result<Self> {
        let words = planes[0].len();
        if words == 0 || planes.iter().any(|p| p.len() != words) {
            return Err(Error::BadVectorLength(words * 32));
        }
        Ok(BitPlaneVector {
            planes,
            len: words * 32,
            signedness,
        })
    }
}

fn nibble_range(signedness: Signedness) -> (i32, i32) {
    match signedness {
        Signedness::Unsigned => (0, 15),
        Signedness::Signed => (-8, 7),
    }
}

/// Transposes 4-bit values into bit planes. The length must be a positive
/// multiple of 32 and every value must be in range for the signedness.
pub fn transpose_to_bitplanes(values: &[i8], signedness: Signedness) -> Result<BitPlaneVector> {
    if values.is_empty() || !values.len().is_multiple_of(32) {
        return Err(Error::BadVectorLength(values.len()));
    }
    let (lo, hi) = nibble_range(signedness);
    let words = values.len() / 32;
    let mut planes = [
        vec![0u32; words],
        vec![0u32; words],
        vec![0u32; words],
        vec![0u32; words],
    ];
    for (i, &v) in values.iter().enumerate() {
        let v = v as i32;
        if v < lo || v > hi {
            return Err(Error::NibbleOutOfRange(
                v,
                match signedness {
                    Signedness::Signed => "signed",
                    Signedness::Unsigned => "unsigned",
                },
            ));
        }
        let bits = (v as u32) & 0xF; // two's-complement nibble
        let (word, bit) = (i / 32, i % 32);
        for (j, plane) in planes.iter_mut().enumerate() {
            plane[word] |= (bits >> j & 1) << bit;
        }
    }
    Ok(BitPlaneVector {
        planes,
        len: values.len(),
        signedness,
    })
}

/// Bit-serial dot product of two plane-transposed vectors.
///
/// Exact for unsigned inputs up to [`MAX_EXACT_UNSIGNED_LEN`] elements and
/// for signed inputs of comparable magnitude; beyond that the 32-bit
/// accumulator wraps, matching the naive wrapped dot product. The trace is
/// data-independent: per block, [`BLOCK_LOAD_SLOTS`] loads then sixteen
/// AND/CAO/LSL_ADD triples.
pub fn bsdp_dot(a: &BitPlaneVector, b: &BitPlaneVector) -> Result<KernelResult> {
    if a.len != b.len {
        return Err(Error::OperandMismatch(format!(
            "vector lengths {} vs {}",
            a.len, b.len
        )));
    }
    if a.signedness != b.signedness {
        return Err(Error::OperandMismatch(
            "vector signedness differs".to_string(),
        ));
    }
    let signed = a.signedness == Signedness::Signed;
    let mut m = Machine::new();
    let mut acc: Word32 = 0;
    for w in 0..a.blocks() {
        for _ in 0..BLOCK_LOAD_SLOTS {
            m.load64();
        }
        for j in 0..4 {
            for k in 0..4 {
                let matches = m
                    .alu(crate::isa::AluOp::And, a.planes[j][w], b.planes[k][w])
                    .expect("no shift");
                let popc = m.cao(matches);
                let shift = (j + k) as u32;
                // The subtracting combinations use the same fused
                // shift-accumulate slot with the accumulate negated.
                m.record(Opcode::LslAdd);
                let term = popc << shift;
                acc = if signed && ((j == 3) ^ (k == 3)) {
                    acc.wrapping_sub(term)
                } else {
                    acc.wrapping_add(term)
                };
            }
        }
    }
    Ok(KernelResult {
        outputs: vec![acc],
        trace: m.into_trace(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dot(a: &[i8], b: &[i8]) -> u32 {
        a.iter().zip(b).fold(0u32, |acc, (&x, &y)| {
            acc.wrapping_add((x as i32).wrapping_mul(y as i32) as u32)
        })
    }

    fn random_vec(rng: &mut ChaCha8Rng, len: usize, signedness: Signedness) -> Vec<i8> {
        let (lo, hi) = super::nibble_range(signedness);
        (0..len).map(|_| rng.gen_range(lo..=hi) as i8).collect()
    }

    #[test]
    fn transpose_constant_examples() {
        let fives = transpose_to_bitplanes(&[5i8; 32], Signedness::Unsigned).unwrap();
        assert_eq!(fives.plane(0), &[0xFFFF_FFFF]);
        assert_eq!(fives.plane(1), &[0]);
        assert_eq!(fives.plane(2), &[0xFFFF_FFFF]);
        assert_eq!(fives.plane(3), &[0]);

        let zeros = transpose_to_bitplanes(&[0i8; 32], Signedness::Unsigned).unwrap();
        for j in 0..4 {
            assert_eq!(zeros.plane(j), &[0]);
        }
    }

    #[test]
    fn transpose_contract_violations() {
        assert!(matches!(
            transpose_to_bitplanes(&[1i8; 31], Signedness::Unsigned),
            Err(Error::BadVectorLength(31))
        ));
        assert!(matches!(
            transpose_to_bitplanes(&[], Signedness::Unsigned),
            Err(Error::BadVectorLength(0))
        ));
        assert!(matches!(
            transpose_to_bitplanes(&[16i8; 32], Signedness::Unsigned),
            Err(Error::NibbleOutOfRange(16, _))
        ));
        assert!(matches!(
            transpose_to_bitplanes(&[8i8; 32], Signedness::Signed),
            Err(Error::NibbleOutOfRange(8, _))
        ));
        assert!(matches!(
            transpose_to_bitplanes(&[-1i8; 32], Signedness::Unsigned),
            Err(Error::NibbleOutOfRange(-1, _))
        ));
    }

    #[test]
    fn dot_examples() {
        let ones = transpose_to_bitplanes(&[1i8; 32], Signedness::Unsigned).unwrap();
        assert_eq!(bsdp_dot(&ones, &ones).unwrap().outputs[0], 32);

        let maxed = transpose_to_bitplanes(&[15i8; 32], Signedness::Unsigned).unwrap();
        assert_eq!(bsdp_dot(&maxed, &maxed).unwrap().outputs[0], 7200);

        let neg8 = transpose_to_bitplanes(&[-8i8; 32], Signedness::Signed).unwrap();
        let one = transpose_to_bitplanes(&[1i8; 32], Signedness::Signed).unwrap();
        assert_eq!(bsdp_dot(&neg8, &one).unwrap().outputs[0] as i32, -256);
    }

    #[test]
    fn dot_rejects_mismatches() {
        let a = transpose_to_bitplanes(&[1i8; 32], Signedness::Unsigned).unwrap();
        let b = transpose_to_bitplanes(&[1i8; 64], Signedness::Unsigned).unwrap();
        assert!(bsdp_dot(&a, &b).is_err());
        let c = transpose_to_bitplanes(&[1i8; 32], Signedness::Signed).unwrap();
        assert!(bsdp_dot(&a, &c).is_err());
    }

    #[test]
    fn dot_exhaustive_over_constant_blocks() {
        for signedness in [Signedness::Unsigned, Signedness::Signed] {
            let (lo, hi) = super::nibble_range(signedness);
            for x in lo..=hi {
                for y in lo..=hi {
                    let a = transpose_to_bitplanes(&[x as i8; 32], signedness).unwrap();
                    let b = transpose_to_bitplanes(&[y as i8; 32], signedness).unwrap();
                    let got = bsdp_dot(&a, &b).unwrap().outputs[0];
                    assert_eq!(got as i32, 32 * x * y, "{signedness:?} {x}*{y}");
                }
            }
        }
    }

    #[test]
    fn dot_matches_naive_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for signedness in [Signedness::Unsigned, Signedness::Signed] {
            for len in [32usize, 64, 128, 1024] {
                for _ in 0..200 {
                    let av = random_vec(&mut rng, len, signedness);
                    let bv = random_vec(&mut rng, len, signedness);
                    let a = transpose_to_bitplanes(&av, signedness).unwrap();
                    let b = transpose_to_bitplanes(&bv, signedness).unwrap();
                    assert_eq!(bsdp_dot(&a, &b).unwrap().outputs[0], naive_dot(&av, &bv));
                }
            }
        }
    }

    #[test]
    fn trace_is_affine_in_block_count_and_data_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut per_block = None;
        for blocks in [1usize, 2, 4, 32] {
            let len = blocks * 32;
            let av = random_vec(&mut rng, len, Signedness::Signed);
            let bv = random_vec(&mut rng, len, Signedness::Signed);
            let a = transpose_to_bitplanes(&av, Signedness::Signed).unwrap();
            let b = transpose_to_bitplanes(&bv, Signedness::Signed).unwrap();
            let r = bsdp_dot(&a, &b).unwrap();
            assert_eq!(r.trace.total_instructions(), BLOCK_CYCLES * blocks as u64);
            assert_eq!(r.trace.count_of(Opcode::And), 16 * blocks as u64);
            assert_eq!(r.trace.count_of(Opcode::Cao), 16 * blocks as u64);
            assert_eq!(r.trace.count_of(Opcode::LslAdd), 16 * blocks as u64);
            assert_eq!(
                r.trace.count_of(Opcode::Load64),
                BLOCK_LOAD_SLOTS * blocks as u64
            );
            per_block.get_or_insert(r.trace.total_instructions() / blocks as u64);
        }
        // Unsigned runs cost exactly the same as signed ones.
        let av = random_vec(&mut rng, 64, Signedness::Unsigned);
        let a = transpose_to_bitplanes(&av, Signedness::Unsigned).unwrap();
        let r = bsdp_dot(&a, &a).unwrap();
        assert_eq!(r.trace.total_instructions(), BLOCK_CYCLES * 2);
    }

    proptest! {
        #[test]
        fn roundtrip_identity(values in proptest::collection::vec(-8i8..=7, 32..=256)) {
            let len = values.len() / 32 * 32;
            if len == 0 { return Ok(()); }
            let values = &values[..len];
            let v = transpose_to_bitplanes(values, Signedness::Signed).unwrap();
            prop_assert_eq!(v.reconstruct(), values);
        }

        #[test]
        fn bilinearity_on_concatenation(
            a1 in proptest::collection::vec(0i8..=15, 32),
            a2 in proptest::collection::vec(0i8..=15, 64),
            b1 in proptest::collection::vec(0i8..=15, 32),
            b2 in proptest::collection::vec(0i8..=15, 64),
        ) {
            let dot = |x: &[i8], y: &[i8]| {
                let xp = transpose_to_bitplanes(x, Signedness::Unsigned).unwrap();
                let yp = transpose_to_bitplanes(y, Signedness::Unsigned).unwrap();
                bsdp_dot(&xp, &yp).unwrap().outputs[0]
            };
            let joined_a: Vec<i8> = a1.iter().chain(&a2).copied().collect();
            let joined_b: Vec<i8> = b1.iter().chain(&b2).copied().collect();
            prop_assert_eq!(
                dot(&joined_a, &joined_b),
                dot(&a1, &b1).wrapping_add(dot(&a2, &b2))
            );
        }

        #[test]
        fn signed_and_unsigned_agree_on_shared_range(
            a in proptest::collection::vec(0i8..=7, 32),
            b in proptest::collection::vec(0i8..=7, 32),
        ) {
            let dot = |s: Signedness| {
                let xp = transpose_to_bitplanes(&a, s).unwrap();
                let yp = transpose_to_bitplanes(&b, s).unwrap();
                bsdp_dot(&xp, &yp).unwrap().outputs[0]
            };
            prop_assert_eq!(dot(Signedness::Signed), dot(Signedness::Unsigned));
        }
    }
}
