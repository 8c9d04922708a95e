//! Deterministic RNG construction.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed from a 64-bit
//! seed. Sub-streams (per tree, per posterior sample, per epoch) are derived
//! with [`derive`] so results never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `master ^ f(stream)`.
pub fn derive(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(master: u64, stream: u64) -> Rng {
    rng(derive(master, stream))
}

/// FNV-1a, used for schema fingerprints stored in model artifacts.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
