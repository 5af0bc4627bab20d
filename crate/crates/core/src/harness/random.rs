//! Plain random instances: mostly short jobs with occasional long ones,
//! released at a rate that keeps the machines around 90% busy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algorithms::rng::derive_seed;
use crate::error::Result;
use crate::model::{Instance, InstanceMeta, Job};
use crate::time::TimeQ;

pub const RANDOM: &str = "random";

/// Sizes are `1/4 … 1` (90%) or `4 … 16` (10%), releases are multiples of
/// `1/4` spread over about `1.75·n/m` time units.
pub fn gen_random(n: usize, m: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[4]));
    let span = ((7 * n) as u64).div_ceil(m.max(1) as u64).max(1);
    let jobs = (0..n)
        .map(|id| {
            let r = TimeQ::new(rng.gen_range(0..span) as i64, 4);
            let p = if rng.gen_bool(0.1) {
                TimeQ::from_int(rng.gen_range(4..=16))
            } else {
                TimeQ::new(rng.gen_range(1..=4), 4)
            };
            Job::new(id, r, p)
        })
        .collect();
    let meta = InstanceMeta { family: RANDOM.into(), n: Some(n), m: Some(m), seed: Some(seed), ..Default::default() };
    Ok(Instance::new(m, jobs, false)?.with_meta(meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        assert_eq!(gen_random(50, 2, 7).unwrap(), gen_random(50, 2, 7).unwrap());
        assert_ne!(gen_random(50, 2, 7).unwrap(), gen_random(50, 2, 8).unwrap());
        assert_eq!(gen_random(50, 2, 7).unwrap().n(), 50);
    }
}
