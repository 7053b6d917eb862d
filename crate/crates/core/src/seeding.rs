//! Deterministic stream derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is
//! derived from a master seed plus a structural address (query id and
//! impression index, or a task label and task index). Sampling order and
//! worker scheduling therefore never affect results: the stream for
//! impression *i* of query *q* is the same whether it is drawn first, last,
//! or on another thread.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; the standard 64-bit avalanche mix.
#[must_use]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// FNV-1a over raw bytes; stable across platforms and compiler versions.
#[must_use]
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derive a child seed from a master seed, a textual label, and an index.
#[must_use]
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut x = splitmix64(master ^ fnv1a64(label.as_bytes()));
    x = splitmix64(x ^ index);
    x
}

/// RNG for one labelled task (replication, restart, schedule point, ...).
#[must_use]
pub fn derive_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, index))
}

/// RNG for a single impression, addressed by query id and impression index.
#[must_use]
pub fn impression_rng(master: u64, query_id: &str, index: u64) -> ChaCha8Rng {
    derive_rng(master, query_id, index)
}
