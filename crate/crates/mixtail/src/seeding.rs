//! Deterministic stream derivation.
//!
//! Every independent random stream (one per process coordinate pair,
//! replication, frequency draw, ...) derives its own 64-bit seed from a
//! master seed via SplitMix64 finalization:
//!
//! ```text
//! z = x + 0x9E3779B97F4A7C15
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z = z ^ (z >> 31)
//! ```
//!
//! applied to `master`, then `stream`, then `replication`, chaining the
//! output. Any implementation that reproduces these constants regenerates
//! the exact same streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from (master, stream id, replication id).
pub fn derive_seed(master: u64, stream: u64, replication: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ replication)
}

/// The RNG used throughout the crate, seeded from a derived 64-bit seed.
pub fn rng_for(master: u64, stream: u64, replication: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, replication))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_vector() {
        // First output of the reference SplitMix64 sequence seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn streams_are_distinct_and_stable() {
        assert_eq!(derive_seed(7, 1, 0), derive_seed(7, 1, 0));
        assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 2, 0));
        assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 1, 1));
        assert_ne!(derive_seed(7, 1, 0), derive_seed(8, 1, 0));
    }
}
