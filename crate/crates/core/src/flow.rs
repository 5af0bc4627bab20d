//! Flow-time accounting.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, JobId, Schedule};
use crate::time::TimeQ;

/// Which reference value a ratio was computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Srpt,
    BruteForce,
    Witness,
    SumP,
    None,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Srpt => "srpt",
            BaselineKind::BruteForce => "brute-force",
            BaselineKind::Witness => "witness",
            BaselineKind::SumP => "sum-p",
            BaselineKind::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowReport {
    pub per_job: BTreeMap<JobId, TimeQ>,
    pub total: TimeQ,
    pub baseline_used: BaselineKind,
}

/// Sums `C_j − r_j` over all jobs. Expects a schedule that already passed
/// validation; a job without a Completed segment is reported as an error.
pub fn total_flow(instance: &Instance, schedule: &Schedule) -> Result<FlowReport> {
    let completions = schedule.completions(instance.n());
    let mut per_job = BTreeMap::new();
    let mut total = TimeQ::zero();
    for job in instance.jobs() {
        let c = completions[job.id]
            .as_ref()
            .ok_or_else(|| Error::InvalidInstance(format!("job {} never completes", job.id)))?;
        let f = c - &job.release;
        total += &f;
        per_job.insert(job.id, f);
    }
    Ok(FlowReport { per_job, total, baseline_used: BaselineKind::None })
}

/// Total flow without building the per-job map.
pub fn flow_sum(instance: &Instance, schedule: &Schedule) -> Result<TimeQ> {
    let completions = schedule.completions(instance.n());
    let mut total = TimeQ::zero();
    for job in instance.jobs() {
        let c = completions[job.id]
            .as_ref()
            .ok_or_else(|| Error::InvalidInstance(format!("job {} never completes", job.id)))?;
        total += c - &job.release;
    }
    Ok(total)
}
