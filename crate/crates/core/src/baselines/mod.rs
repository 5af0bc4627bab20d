//! Offline reference schedules and exact oracles.

pub mod brute;
pub mod reassign;
pub mod srpt;

pub use brute::{brute_force_opt_np, BRUTE_MAX_JOBS, BRUTE_MAX_MACHINES};
pub use reassign::{reassign_to_fewer_machines, Reassigned};
pub use srpt::run_srpt;
