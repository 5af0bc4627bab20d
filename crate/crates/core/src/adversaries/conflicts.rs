//! Conflicts between large jobs and small-job periods in the gadget
//! families, and the flow those small jobs must pay for them.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::model::{Outcome, Schedule};
use crate::time::TimeQ;

use super::generators::{GadgetRole, GeneratedFamily, MULTI_LB, MULTI_RESTART_LB};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodKind {
    Random,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodReport {
    pub batch: usize,
    pub kind: PeriodKind,
    /// The period is `[start, start + 1)`.
    pub start: TimeQ,
    /// Completed large-job runs starting in `[start − 3/2, start + 1/2]`.
    pub conflicts: usize,
    pub small_flow: TimeQ,
    /// `conflicts · k / 8`.
    pub bound: TimeQ,
}

impl PeriodReport {
    pub fn holds(&self) -> bool {
        self.small_flow >= self.bound
    }
}

/// Per-period conflict counts and small-job flow. Killed runs are not
/// counted as conflicts: the flow bound relies on the large job occupying
/// its machine for at least half the period.
pub fn analyze_conflicts(family: &GeneratedFamily, schedule: &Schedule) -> Result<Vec<PeriodReport>> {
    let fam = family.family();
    if fam != MULTI_LB && fam != MULTI_RESTART_LB {
        return Err(Error::Unsupported(format!("conflict analysis applies to gadget families, not {fam:?}")));
    }
    let k = family.k();
    let inst = &family.instance;
    let mut large_starts: Vec<TimeQ> = Vec::new();
    let mut completion = vec![None; inst.n()];
    for seg in &schedule.segments {
        if seg.job >= inst.n() {
            return Err(Error::UnknownJob(seg.job));
        }
        if seg.outcome != Outcome::Completed {
            continue;
        }
        completion[seg.job] = Some(seg.end.clone());
        if matches!(family.roles[seg.job], GadgetRole::Large { .. }) {
            large_starts.push(seg.start.clone());
        }
    }

    let half = TimeQ::new(1, 2);
    let three_halves = TimeQ::new(3, 2);
    let mut reports: Vec<PeriodReport> = Vec::new();
    for job in inst.jobs() {
        let (batch, kind) = match family.roles[job.id] {
            GadgetRole::Large { .. } => continue,
            GadgetRole::FixedSmall { batch } => (batch, PeriodKind::Fixed),
            GadgetRole::RandomSmall { batch } => (batch, PeriodKind::Random),
        };
        let i = match reports.iter().position(|r| r.batch == batch && r.kind == kind) {
            Some(i) => i,
            None => {
                // Releases inside a period are `start + i/k`, so the period
                // starts at the floor of any of them.
                let start = TimeQ::from_big(BigRational::from_integer(job.release.floor()));
                let lo = &start - &three_halves;
                let hi = &start + &half;
                let conflicts = large_starts.iter().filter(|s| **s >= lo && **s <= hi).count();
                reports.push(PeriodReport {
                    batch,
                    kind,
                    start,
                    conflicts,
                    small_flow: TimeQ::zero(),
                    bound: TimeQ::new(conflicts as i64 * k as i64, 8),
                });
                reports.len() - 1
            }
        };
        let c = completion[job.id]
            .clone()
            .ok_or_else(|| Error::InvalidInstance(format!("job {} never completes", job.id)))?;
        reports[i].small_flow += &c - &job.release;
    }
    reports.sort_by(|a, b| a.start.cmp(&b.start));
    Ok(reports)
}
