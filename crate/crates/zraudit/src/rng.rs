//! Seed derivation for reproducible sub-streams.
//!
//! Everything stochastic in this crate is keyed by a master `u64` seed plus a
//! textual label and an index, so that independent components (tampering
//! draws, bootstrap replicates, Monte Carlo trials, data sub-streams) never
//! share a stream and runs are replayable bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a child seed from `(master, label, index)`.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    // FNV-1a over the label, then two SplitMix64 finalization rounds.
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    splitmix(splitmix(master ^ h).wrapping_add(index))
}

/// Deterministic RNG for a derived stream.
pub fn stream(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, index))
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
