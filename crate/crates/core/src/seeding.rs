//! Deterministic seed derivation.
//!
//! Every random stream in the simulator and trainer is a ChaCha12 generator
//! seeded from the master seed plus a purpose label, so independent concerns
//! (environment init, task queue, policy sampling, minibatch shuffling, ...)
//! never share or race a generator.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// FNV-1a over a byte string; stable, dependency-free label hashing.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `master` and a purpose label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    fnv1a(&[&master.to_le_bytes()[..], label.as_bytes()].concat())
}

/// Derives a child seed indexed by an integer (worker id, episode, ...).
pub fn derive_seed_indexed(master: u64, label: &str, index: u64) -> u64 {
    fnv1a(
        &[
            &master.to_le_bytes()[..],
            label.as_bytes(),
            &index.to_le_bytes()[..],
        ]
        .concat(),
    )
}

/// Creates a ChaCha12 generator for `label` under `master`.
pub fn rng_for(master: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, label))
}

/// Creates a ChaCha12 generator for `(label, index)` under `master`.
pub fn rng_for_indexed(master: u64, label: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed_indexed(master, label, index))
}
