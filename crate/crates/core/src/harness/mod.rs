//! Experiment plumbing: algorithm registry, competitive ratios against an
//! explicit baseline, scaling fits and parallel sweeps.

pub mod bench;
pub mod fit;
pub mod random;
pub mod ratio;
pub mod registry;

pub use bench::{run_bench, write_bench_csv, BenchConfig, BenchRow};
pub use fit::{fit_scaling, Fit};
pub use random::{gen_random, RANDOM};
pub use ratio::{compute_ratio, BaselinePolicy, Ratio};
pub use registry::{run_algorithm, run_algorithm_traced, transcript_from_schedule, Algorithm};
