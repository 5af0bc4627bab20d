//! Jobs, instances and schedules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::TimeQ;

pub type JobId = usize;
pub type MachineIndex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    ProxyOf(JobId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Job {
    pub id: JobId,
    pub release: TimeQ,
    pub size: TimeQ,
    pub provenance: Provenance,
}

impl Job {
    pub fn new(id: JobId, release: TimeQ, size: TimeQ) -> Self {
        Job { id, release, size, provenance: Provenance::Original }
    }
}

/// Generator metadata carried alongside an instance so that randomized
/// families (and their witness schedules) can be reproduced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<TimeQ>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coins: Vec<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub batch_starts: Vec<TimeQ>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// A validated problem instance. Jobs are kept sorted by `(release, id)`
/// and ids are exactly `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    machines: usize,
    jobs: Vec<Job>,
    by_id: Vec<usize>,
    allow_zero_size: bool,
    pub meta: Option<InstanceMeta>,
}

impl Instance {
    pub fn new(machines: usize, mut jobs: Vec<Job>, allow_zero_size: bool) -> Result<Self> {
        if machines == 0 {
            return Err(Error::InvalidInstance("machine count must be positive".into()));
        }
        jobs.sort_by(|a, b| a.release.cmp(&b.release).then(a.id.cmp(&b.id)));
        let n = jobs.len();
        let mut by_id = vec![usize::MAX; n];
        for (pos, job) in jobs.iter().enumerate() {
            if job.id >= n || by_id[job.id] != usize::MAX {
                return Err(Error::InvalidInstance(format!(
                    "job ids must be exactly 0..{n}; offending id {}",
                    job.id
                )));
            }
            if job.release.is_negative() {
                return Err(Error::InvalidInstance(format!("job {} has negative release", job.id)));
            }
            if job.size.is_negative() || (job.size.is_zero() && !allow_zero_size) {
                return Err(Error::InvalidInstance(format!(
                    "job {} has non-positive size {}",
                    job.id, job.size
                )));
            }
            if job.provenance != Provenance::Original {
                return Err(Error::InvalidInstance(format!("job {} is not an original job", job.id)));
            }
            by_id[job.id] = pos;
        }
        Ok(Instance { machines, jobs, by_id, allow_zero_size, meta: None })
    }

    /// Builds an instance from `(release, size)` pairs, assigning ids in the
    /// given order.
    pub fn from_pairs(machines: usize, pairs: &[(TimeQ, TimeQ)]) -> Result<Self> {
        let jobs = pairs
            .iter()
            .enumerate()
            .map(|(i, (r, p))| Job::new(i, r.clone(), p.clone()))
            .collect();
        Instance::new(machines, jobs, false)
    }

    pub fn with_meta(mut self, meta: InstanceMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn allow_zero_size(&self) -> bool {
        self.allow_zero_size
    }

    /// Jobs in `(release, id)` order.
    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, id: JobId) -> &Job {
        &self.jobs[self.by_id[id]]
    }

    pub fn get(&self, id: JobId) -> Option<&Job> {
        self.by_id.get(id).map(|&pos| &self.jobs[pos])
    }

    pub fn total_size(&self) -> TimeQ {
        self.jobs.iter().map(|j| &j.size).sum()
    }

    pub fn max_size(&self) -> TimeQ {
        self.jobs.iter().map(|j| j.size.clone()).max().unwrap_or_default()
    }

    /// Same jobs on a different number of machines.
    pub fn with_machines(&self, machines: usize) -> Result<Self> {
        let mut inst = Instance::new(machines, self.jobs.clone(), self.allow_zero_size)?;
        inst.meta = self.meta.clone();
        Ok(inst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Killed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub job: JobId,
    pub machine: MachineIndex,
    pub start: TimeQ,
    pub end: TimeQ,
    pub outcome: Outcome,
}

impl Segment {
    pub fn completed(job: JobId, machine: MachineIndex, start: TimeQ, end: TimeQ) -> Self {
        Segment { job, machine, start, end, outcome: Outcome::Completed }
    }

    pub fn killed(job: JobId, machine: MachineIndex, start: TimeQ, end: TimeQ) -> Self {
        Segment { job, machine, start, end, outcome: Outcome::Killed }
    }

    pub fn len(&self) -> TimeQ {
        &self.end - &self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    NonPreemptive,
    KillRestart,
    Preemptive,
    PreemptiveMigratory,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-preemptive" => Ok(Model::NonPreemptive),
            "kill-restart" => Ok(Model::KillRestart),
            "preemptive" => Ok(Model::Preemptive),
            "preemptive-migratory" => Ok(Model::PreemptiveMigratory),
            _ => Err(Error::Parse(format!("unknown model {s:?}"))),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Model::NonPreemptive => "non-preemptive",
            Model::KillRestart => "kill-restart",
            Model::Preemptive => "preemptive",
            Model::PreemptiveMigratory => "preemptive-migratory",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub model: Model,
    pub segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(model: Model) -> Self {
        Schedule { model, segments: Vec::new() }
    }

    pub fn with_segments(model: Model, segments: Vec<Segment>) -> Self {
        let mut s = Schedule { model, segments };
        s.normalize();
        s
    }

    /// Orders segments by `(start, machine, job)`; output of every policy
    /// goes through this so that equal schedules compare equal.
    pub fn normalize(&mut self) {
        self.segments.sort_by(|a, b| {
            a.start
                .cmp(&b.start)
                .then(a.machine.cmp(&b.machine))
                .then(a.job.cmp(&b.job))
                .then(a.end.cmp(&b.end))
        });
    }

    /// End of the job's Completed segment (the last one, if several).
    pub fn completion(&self, job: JobId) -> Option<TimeQ> {
        self.segments
            .iter()
            .filter(|s| s.job == job && s.outcome == Outcome::Completed)
            .map(|s| s.end.clone())
            .max()
    }

    /// All completion times indexed by job id (`None` for unfinished jobs).
    pub fn completions(&self, n: usize) -> Vec<Option<TimeQ>> {
        let mut out: Vec<Option<TimeQ>> = vec![None; n];
        for s in &self.segments {
            if s.outcome == Outcome::Completed && s.job < n {
                let slot = &mut out[s.job];
                if slot.as_ref().is_none_or(|c| s.end > *c) {
                    *slot = Some(s.end.clone());
                }
            }
        }
        out
    }

    pub fn segments_of(&self, job: JobId) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.job == job)
    }

    /// Start of the job's first segment.
    pub fn first_start(&self, job: JobId) -> Option<TimeQ> {
        self.segments_of(job).map(|s| s.start.clone()).min()
    }

    pub fn kill_count(&self) -> usize {
        self.segments.iter().filter(|s| s.outcome == Outcome::Killed).count()
    }

    pub fn machines_used(&self) -> usize {
        self.segments.iter().map(|s| s.machine + 1).max().unwrap_or(0)
    }
}
