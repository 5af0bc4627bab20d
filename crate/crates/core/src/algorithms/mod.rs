//! Online scheduling policies.

pub mod det_np;
pub mod greedy;
pub mod kill_restart;
pub mod randomized;
pub mod rng;
pub mod unknown_n;

use crate::time::isqrt;

pub use det_np::{run_det_nonpreemptive, DetNpConfig};
pub use greedy::{run_greedy, Greedy};
pub use kill_restart::{run_kill_restart, KillRestart};
pub use randomized::{rand_rounds, run_rand_multi, run_rand_single, RandConfig, Round};
pub use rng::RngPolicy;
pub use unknown_n::{run_kill_restart_unknown_n, UnknownN, UnknownNStats};

/// `⌊√(n·m)⌋`, at least 1.
pub fn sqrt_nm(n: usize, m: usize) -> usize {
    (isqrt(n as u128 * m as u128) as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    LargeOnly,
    Mixed,
    SmallOnly,
}
