//! Exact discrete-event laboratory for online total-flow-time scheduling:
//! policies, offline baselines, adversarial instance families and an
//! experiment harness.

pub mod adversaries;
pub mod algorithms;
pub mod baselines;
pub mod engine;
pub mod error;
pub mod flow;
pub mod harness;
pub mod io;
pub mod model;
pub mod nsjf;
pub mod partition;
pub mod time;
pub mod validate;

pub use error::{Error, Result};
pub use flow::{flow_sum, total_flow, BaselineKind, FlowReport};
pub use model::{Instance, InstanceMeta, Job, JobId, MachineIndex, Model, Outcome, Provenance, Schedule, Segment};
pub use time::TimeQ;
pub use validate::{validate_schedule, Rule, ValidationReport, Violation};
