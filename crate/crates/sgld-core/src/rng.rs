//! Deterministic construction of independent random generators.
//!
//! Every generator in this crate is derived from a `(seed, index, role)`
//! triple by keying a counter-based ChaCha cipher with the triple itself.
//! Distinct triples yield statistically independent streams, and a
//! generator's output never depends on when or where it was created, so
//! ensembles can run in any order (or in parallel) and still reproduce
//! bit-for-bit.
//!
//! Roles keep logically separate consumers apart. In particular the data
//! stream and the innovation noise of a chain draw from different
//! generators, so they are independent and neither can perturb the other by
//! consuming draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Role tags for [`derive_rng`].
pub mod role {
    /// Innovation noise ξ of a chain.
    pub const NOISE: u64 = 0;
    /// Stationary data stream Y of a chain.
    pub const STREAM: u64 = 1;
    /// Per-point Monte Carlo draws in the drift verifier.
    pub const DRIFT_VERIFY: u64 = 2;
    /// Per-point Monte Carlo draws in the minorization verifier.
    pub const MINORIZE_VERIFY: u64 = 3;
    /// Sampling-plan construction (sphere directions, data draws).
    pub const PLAN: u64 = 4;
    /// Projection directions for total-variation estimates in d > 1.
    pub const PROJECTION: u64 = 5;
}

/// Builds the generator for `(seed, index, role)`.
///
/// The 256-bit ChaCha key is the triple plus a fixed domain tag, so the
/// derivation is a pure function of the three integers.
pub fn derive_rng(seed: u64, index: u64, role: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&role.to_le_bytes());
    key[24..32].copy_from_slice(b"sgld.rng");
    ChaCha8Rng::from_seed(key)
}

/// Derives a sub-experiment seed from a master seed and a label
/// (SplitMix64 finalizer). Used to give the ensembles of a multi-ensemble
/// experiment disjoint seed spaces.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_deterministic() {
        let mut a = derive_rng(42, 7, role::NOISE);
        let mut b = derive_rng(42, 7, role::NOISE);
        for _ in 0..16 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn triples_give_distinct_streams() {
        let mut base = derive_rng(42, 7, role::NOISE);
        let mut other_index = derive_rng(42, 8, role::NOISE);
        let mut other_role = derive_rng(42, 7, role::STREAM);
        let x = base.random::<u64>();
        assert_ne!(x, other_index.random::<u64>());
        assert_ne!(x, other_role.random::<u64>());
    }

    #[test]
    fn seed_derivation_spreads_labels() {
        let s = derive_seed(1, 0);
        assert_ne!(s, derive_seed(1, 1));
        assert_ne!(derive_seed(0, 5), derive_seed(1, 5));
        // stable across calls
        assert_eq!(derive_seed(123, 456), derive_seed(123, 456));
    }
}
