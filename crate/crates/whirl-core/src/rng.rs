//! Deterministic seed derivation.
//!
//! Every stochastic stage derives its own seed from the run's master seed
//! plus a stream tag and indices. This keeps results independent of rollout
//! execution order and makes checkpoint resume exact.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags separating the RNG domains of the pipeline.
pub mod stream {
    pub const DEMO_EXPERT: u64 = 0x01;
    pub const DEMO_CORRUPT: u64 = 0x02;
    pub const PRIOR_EXTRACT: u64 = 0x03;
    pub const POLICY_INIT: u64 = 0x04;
    pub const SAMPLE: u64 = 0x05;
    pub const EVAL: u64 = 0x06;
    pub const FIT: u64 = 0x07;
    pub const ROLLOUT: u64 = 0x08;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a master seed and a list of tags/indices into a single seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut acc = splitmix(master);
    for &t in tags {
        acc = splitmix(acc ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    acc
}

/// ChaCha8 generator seeded from a derived seed.
pub fn derived_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
