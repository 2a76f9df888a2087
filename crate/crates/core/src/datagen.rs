//! Seeded input generators. Every buffer is fully determined by its seed.

use crate::isa::Signedness;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn i8_buffer(seed: u64, n: usize) -> Vec<i8> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen()).collect()
}

pub fn i32_buffer(seed: u64, n: usize) -> Vec<i32> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen()).collect()
}

/// 4-bit values in range for the signedness.
pub fn nibble_buffer(seed: u64, n: usize, signedness: Signedness) -> Vec<i8> {
    let mut r = rng(seed);
    let range = match signedness {
        Signedness::Signed => -8i8..=7,
        Signedness::Unsigned => 0i8..=15,
    };
    (0..n).map(|_| r.gen_range(range.clone())).collect()
}
