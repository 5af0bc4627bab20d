//! Per-job randomness derived from `(seed, job id)` so that every draw is
//! reproducible regardless of when it is requested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::JobId;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed hash of a seed and a sequence of words.
pub fn derive_seed(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(seed), |acc, &w| mix64(acc ^ mix64(w)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngPolicy {
    pub seed: u64,
}

const STREAM_PATIENCE: u64 = 1;
const STREAM_MACHINE: u64 = 2;

impl RngPolicy {
    pub fn new(seed: u64) -> Self {
        RngPolicy { seed }
    }

    pub fn stream(&self, job: JobId, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[job as u64, stream]))
    }

    /// Uniform on `1..=max` (`max` is clamped to at least 1).
    pub fn patience(&self, job: JobId, max: u64) -> u64 {
        self.stream(job, STREAM_PATIENCE).gen_range(1..=max.max(1))
    }

    /// Uniform on `0..m`.
    pub fn machine(&self, job: JobId, m: usize) -> usize {
        self.stream(job, STREAM_MACHINE).gen_range(0..m)
    }
}
