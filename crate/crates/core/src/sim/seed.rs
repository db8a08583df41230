//! Order-independent seed derivation.
//!
//! Every replication draws from its own ChaCha stream, keyed by a stable hash
//! of the master seed and a path of integers identifying the experiment cell.
//! Adding replications, reordering work, or running in parallel never changes
//! the draws of an existing cell.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of `(master, path[0], path[1], …)`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

// experiment identifiers
pub(crate) const EXP_COMPARISON: u64 = 1;
pub(crate) const EXP_M_SWEEP: u64 = 2;
pub(crate) const EXP_INIT_STUDY: u64 = 3;
pub(crate) const EXP_RECOVER: u64 = 4;
pub(crate) const EXP_RIP: u64 = 5;

// streams within an experiment
pub(crate) const STREAM_PHI: u64 = 1;
pub(crate) const STREAM_EM_DRAW: u64 = 2;
pub(crate) const STREAM_CONVENTIONAL_DRAW: u64 = 3;
