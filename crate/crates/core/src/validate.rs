//! Feasibility checking of schedules against an instance and a model.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Instance, JobId, Model, Outcome, Schedule, Segment};
use crate::time::TimeQ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    MachineOutOfRange,
    EmptySegment,
    StartBeforeRelease,
    MachineOverlap,
    JobOverlap,
    MultipleSegments,
    KilledInModel,
    WrongLength,
    MultipleCompletions,
    KilledTooLong,
    KilledAfterCompletion,
    Migration,
    WrongTotalWork,
    UnfinishedJob,
}

impl Rule {
    pub fn message(self) -> &'static str {
        match self {
            Rule::MachineOutOfRange => "machine index out of range",
            Rule::EmptySegment => "segment has non-positive length",
            Rule::StartBeforeRelease => "start before release",
            Rule::MachineOverlap => "overlapping segments on one machine",
            Rule::JobOverlap => "job runs on two machines at once",
            Rule::MultipleSegments => "multiple segments in non-preemptive model",
            Rule::KilledInModel => "killed segment not allowed in this model",
            Rule::WrongLength => "completed segment length differs from job size",
            Rule::MultipleCompletions => "job completed more than once",
            Rule::KilledTooLong => "killed segment longer than job size",
            Rule::KilledAfterCompletion => "killed segment after completion",
            Rule::Migration => "job migrates between machines",
            Rule::WrongTotalWork => "processed work differs from job size",
            Rule::UnfinishedJob => "unfinished job",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub job: Option<JobId>,
    /// Index into `schedule.segments`.
    pub segment: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rule.message())?;
        if let Some(j) = self.job {
            write!(f, " (job {j})")?;
        }
        if let Some(s) = self.segment {
            write!(f, " [segment #{s}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Scans `(start, end, index)` triples sorted by `(start, end)` and reports
/// every index whose half-open interval intersects an earlier one.
fn overlapping(mut items: Vec<(&TimeQ, &TimeQ, usize)>) -> Vec<usize> {
    items.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(b.1)));
    let mut out = Vec::new();
    let mut max_end: Option<&TimeQ> = None;
    for (start, end, idx) in items {
        if let Some(me) = max_end {
            if start < me {
                out.push(idx);
            }
        }
        if max_end.is_none_or(|me| end > me) {
            max_end = Some(end);
        }
    }
    out
}

pub fn validate_schedule(instance: &Instance, schedule: &Schedule) -> Result<ValidationReport> {
    let n = instance.n();
    let m = instance.machines();
    let segs = &schedule.segments;
    for s in segs {
        if s.job >= n {
            return Err(Error::UnknownJob(s.job));
        }
    }
    let mut violations = Vec::new();
    let mut push = |rule, job: Option<JobId>, segment: Option<usize>| {
        violations.push(Violation { rule, job, segment });
    };

    for (i, s) in segs.iter().enumerate() {
        let job = instance.job(s.job);
        if s.machine >= m {
            push(Rule::MachineOutOfRange, Some(s.job), Some(i));
        }
        let zero_ok = s.end == s.start && s.outcome == Outcome::Completed && job.size.is_zero();
        if s.end <= s.start && !zero_ok {
            push(Rule::EmptySegment, Some(s.job), Some(i));
        }
        if s.start < job.release {
            push(Rule::StartBeforeRelease, Some(s.job), Some(i));
        }
    }

    let mut per_machine: Vec<Vec<(&TimeQ, &TimeQ, usize)>> = vec![Vec::new(); m];
    let mut per_job: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in segs.iter().enumerate() {
        if s.machine < m {
            per_machine[s.machine].push((&s.start, &s.end, i));
        }
        per_job[s.job].push(i);
    }
    for items in per_machine {
        for idx in overlapping(items) {
            push(Rule::MachineOverlap, Some(segs[idx].job), Some(idx));
        }
    }
    for idxs in &per_job {
        let items = idxs.iter().map(|&i| (&segs[i].start, &segs[i].end, i)).collect();
        for idx in overlapping(items) {
            push(Rule::JobOverlap, Some(segs[idx].job), Some(idx));
        }
    }

    for (job_id, idxs) in per_job.iter().enumerate() {
        let size = &instance.job(job_id).size;
        let mine: Vec<(usize, &Segment)> = idxs.iter().map(|&i| (i, &segs[i])).collect();
        let completed: Vec<&(usize, &Segment)> =
            mine.iter().filter(|(_, s)| s.outcome == Outcome::Completed).collect();
        if completed.is_empty() {
            push(Rule::UnfinishedJob, Some(job_id), None);
        }
        match schedule.model {
            Model::NonPreemptive | Model::KillRestart => {
                if schedule.model == Model::NonPreemptive && mine.len() > 1 {
                    push(Rule::MultipleSegments, Some(job_id), Some(mine[1].0));
                }
                if completed.len() > 1 {
                    push(Rule::MultipleCompletions, Some(job_id), Some(completed[1].0));
                }
                for (i, s) in &mine {
                    match s.outcome {
                        Outcome::Completed => {
                            if s.len() != *size {
                                push(Rule::WrongLength, Some(job_id), Some(*i));
                            }
                        }
                        Outcome::Killed => {
                            if schedule.model == Model::NonPreemptive {
                                push(Rule::KilledInModel, Some(job_id), Some(*i));
                                continue;
                            }
                            if s.len() > *size {
                                push(Rule::KilledTooLong, Some(job_id), Some(*i));
                            }
                            if completed.iter().any(|(_, c)| s.end > c.start) {
                                push(Rule::KilledAfterCompletion, Some(job_id), Some(*i));
                            }
                        }
                    }
                }
            }
            Model::Preemptive | Model::PreemptiveMigratory => {
                for (i, s) in &mine {
                    if s.outcome == Outcome::Killed {
                        push(Rule::KilledInModel, Some(job_id), Some(*i));
                    }
                }
                if schedule.model == Model::Preemptive {
                    if let Some((i, _)) = mine.iter().find(|(_, s)| s.machine != mine[0].1.machine) {
                        push(Rule::Migration, Some(job_id), Some(*i));
                    }
                }
                let work: TimeQ = mine.iter().map(|(_, s)| s.len()).sum();
                if !mine.is_empty() && work != *size {
                    push(Rule::WrongTotalWork, Some(job_id), None);
                }
            }
        }
    }

    Ok(ValidationReport { violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, Job, Segment};

    fn q(n: i64) -> TimeQ {
        TimeQ::from_int(n)
    }

    fn one_job(r: i64, p: i64) -> Instance {
        Instance::new(1, vec![Job::new(0, q(r), q(p))], false).unwrap()
    }

    #[test]
    fn single_job_identity_case() {
        let inst = one_job(0, 2);
        let s = Schedule::with_segments(Model::NonPreemptive, vec![Segment::completed(0, 0, q(0), q(2))]);
        assert!(validate_schedule(&inst, &s).unwrap().is_ok());
    }

    #[test]
    fn kill_then_complete_depends_on_model() {
        let inst = one_job(0, 2);
        let segs = vec![Segment::killed(0, 0, q(0), q(1)), Segment::completed(0, 0, q(1), q(3))];
        let np = validate_schedule(&inst, &Schedule::with_segments(Model::NonPreemptive, segs.clone())).unwrap();
        assert!(np.has(Rule::MultipleSegments));
        let kr = validate_schedule(&inst, &Schedule::with_segments(Model::KillRestart, segs)).unwrap();
        assert!(kr.is_ok(), "{kr}");
    }

    #[test]
    fn start_before_release() {
        let inst = one_job(1, 1);
        let s = Schedule::with_segments(Model::NonPreemptive, vec![Segment::completed(0, 0, q(0), q(1))]);
        let rep = validate_schedule(&inst, &s).unwrap();
        assert!(rep.has(Rule::StartBeforeRelease));
        assert_eq!(rep.violations.len(), 1);
    }

    #[test]
    fn unknown_job_is_structural() {
        let inst = one_job(0, 1);
        let s = Schedule::with_segments(Model::NonPreemptive, vec![Segment::completed(3, 0, q(0), q(1))]);
        assert!(matches!(validate_schedule(&inst, &s), Err(Error::UnknownJob(3))));
    }

    #[test]
    fn unfinished_job() {
        let inst = one_job(0, 2);
        let s = Schedule::with_segments(Model::KillRestart, vec![Segment::killed(0, 0, q(0), q(1))]);
        assert!(validate_schedule(&inst, &s).unwrap().has(Rule::UnfinishedJob));
    }

    #[test]
    fn touching_segments_do_not_overlap() {
        let inst = Instance::new(1, vec![Job::new(0, q(0), q(1)), Job::new(1, q(0), q(1))], false).unwrap();
        let s = Schedule::with_segments(
            Model::NonPreemptive,
            vec![Segment::completed(0, 0, q(0), q(1)), Segment::completed(1, 0, q(1), q(2))],
        );
        assert!(validate_schedule(&inst, &s).unwrap().is_ok());
        let bad = Schedule::with_segments(
            Model::NonPreemptive,
            vec![Segment::completed(0, 0, q(0), q(1)), Segment::completed(1, 0, TimeQ::new(1, 2), TimeQ::new(3, 2))],
        );
        assert!(validate_schedule(&inst, &bad).unwrap().has(Rule::MachineOverlap));
    }

    #[test]
    fn zero_size_jobs_occupy_an_instant() {
        let jobs = vec![Job::new(0, q(0), q(2)), Job::new(1, q(0), q(0))];
        let inst = Instance::new(1, jobs, true).unwrap();
        let inside = Schedule::with_segments(
            Model::NonPreemptive,
            vec![Segment::completed(0, 0, q(0), q(2)), Segment::completed(1, 0, q(1), q(1))],
        );
        assert!(validate_schedule(&inst, &inside).unwrap().has(Rule::MachineOverlap));
        let at_end = Schedule::with_segments(
            Model::NonPreemptive,
            vec![Segment::completed(0, 0, q(0), q(2)), Segment::completed(1, 0, q(2), q(2))],
        );
        assert!(validate_schedule(&inst, &at_end).unwrap().is_ok());
    }

    #[test]
    fn preemptive_rules() {
        let inst = Instance::new(2, vec![Job::new(0, q(0), q(2))], false).unwrap();
        let split = vec![Segment::completed(0, 0, q(0), q(1)), Segment::completed(0, 1, q(2), q(3))];
        let p = validate_schedule(&inst, &Schedule::with_segments(Model::Preemptive, split.clone())).unwrap();
        assert!(p.has(Rule::Migration));
        let pm = validate_schedule(&inst, &Schedule::with_segments(Model::PreemptiveMigratory, split)).unwrap();
        assert!(pm.is_ok(), "{pm}");
        let short = vec![Segment::completed(0, 0, q(0), q(1))];
        let rep = validate_schedule(&inst, &Schedule::with_segments(Model::Preemptive, short)).unwrap();
        assert!(rep.has(Rule::WrongTotalWork));
    }

    #[test]
    fn killed_segments_must_precede_completion() {
        let inst = one_job(0, 2);
        let segs = vec![Segment::completed(0, 0, q(0), q(2)), Segment::killed(0, 0, q(3), q(4))];
        let rep = validate_schedule(&inst, &Schedule::with_segments(Model::KillRestart, segs)).unwrap();
        assert!(rep.has(Rule::KilledAfterCompletion));
        let long = vec![Segment::killed(0, 0, q(0), q(3)), Segment::completed(0, 0, q(3), q(5))];
        let rep = validate_schedule(&inst, &Schedule::with_segments(Model::KillRestart, long)).unwrap();
        assert!(rep.has(Rule::KilledTooLong));
    }
}
