//! Seeded randomness. Every stochastic component draws from
//! xoshiro256++ (`rand_xoshiro::Xoshiro256PlusPlus`), seeded through
//! SplitMix64 by `seed_from_u64`.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng64 = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Independent stream for `key` under `seed`, so per-item randomness does
/// not depend on iteration order.
pub fn substream(seed: u64, key: &str) -> Rng64 {
    let mixed = seed.rotate_left(17) ^ fnv1a(key.as_bytes()).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    seeded(mixed)
}
