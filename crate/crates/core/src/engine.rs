//! Deterministic discrete-event engine shared by all online policies and by
//! the adaptive adversaries.
//!
//! At each timestamp the engine repeats, until nothing changes:
//! completions, source timers, releases (by id), policy wakeups, dispatch.
//! Repetition matters for zero-size jobs and for releases injected at the
//! current instant in reaction to a start.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Instance, Job, JobId, MachineIndex, Model, Schedule, Segment};
use crate::time::TimeQ;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Release { t: TimeQ, job: JobId, p: TimeQ },
    Classify { t: TimeQ, job: JobId, large: bool, #[serde(skip_serializing_if = "Option::is_none")] displaced: Option<JobId>, #[serde(skip_serializing_if = "Option::is_none")] proxy: Option<JobId> },
    Start { t: TimeQ, job: JobId, machine: MachineIndex },
    Kill { t: TimeQ, job: JobId, machine: MachineIndex },
    Complete { t: TimeQ, job: JobId, machine: MachineIndex },
    NUpdate { t: TimeQ, n_estimate: usize },
    LabelFlip { t: TimeQ, job: JobId, large: bool },
    Phase { t: TimeQ, name: String },
}

impl Event {
    pub fn time(&self) -> &TimeQ {
        match self {
            Event::Release { t, .. }
            | Event::Classify { t, .. }
            | Event::Start { t, .. }
            | Event::Kill { t, .. }
            | Event::Complete { t, .. }
            | Event::NUpdate { t, .. }
            | Event::LabelFlip { t, .. }
            | Event::Phase { t, .. } => t,
        }
    }
}

/// Actions visible to an adversary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observed {
    Start { job: JobId, machine: MachineIndex },
    Kill { job: JobId, machine: MachineIndex },
    Complete { job: JobId, machine: MachineIndex },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    /// Known to the engine but not yet released to the policy.
    Queued,
    Waiting,
    Running(MachineIndex),
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub job: JobId,
    pub start: TimeQ,
    pub end: TimeQ,
}

/// Engine state as seen by a policy during a hook.
pub struct Ctx {
    now: TimeQ,
    jobs: Vec<Option<Job>>,
    status: Vec<JobStatus>,
    machines: Vec<Option<Run>>,
    segments: Vec<Segment>,
    wakeups: BTreeSet<TimeQ>,
    transcript: Option<Vec<Event>>,
    observed: Vec<Observed>,
    actions: usize,
    violation: Option<String>,
}

impl Ctx {
    pub fn now(&self) -> &TimeQ {
        &self.now
    }

    pub fn machines(&self) -> usize {
        self.machines.len()
    }

    pub fn running(&self, machine: MachineIndex) -> Option<&Run> {
        self.machines[machine].as_ref()
    }

    pub fn is_idle(&self, machine: MachineIndex) -> bool {
        self.machines[machine].is_none()
    }

    pub fn status(&self, job: JobId) -> JobStatus {
        self.status[job]
    }

    pub fn job(&self, id: JobId) -> &Job {
        self.jobs[id].as_ref().expect("job known to the engine")
    }

    /// Starts a released, waiting job on an idle machine.
    pub fn start(&mut self, machine: MachineIndex, job: JobId) {
        if machine >= self.machines.len() || self.machines[machine].is_some() {
            self.violation.get_or_insert(format!("start of job {job} on busy or unknown machine {machine}"));
            return;
        }
        if job >= self.status.len() || self.status[job] != JobStatus::Waiting {
            self.violation.get_or_insert(format!("start of job {job} which is not waiting"));
            return;
        }
        let size = self.job(job).size.clone();
        let end = &self.now + &size;
        self.machines[machine] = Some(Run { job, start: self.now.clone(), end });
        self.status[job] = JobStatus::Running(machine);
        self.observed.push(Observed::Start { job, machine });
        self.log(Event::Start { t: self.now.clone(), job, machine });
        self.actions += 1;
    }

    /// Kills the job running on `machine`; its work is lost and it goes back
    /// to waiting. A run started at this very instant leaves no segment.
    pub fn kill(&mut self, machine: MachineIndex) -> Option<JobId> {
        let run = self.machines.get_mut(machine)?.take()?;
        if run.start < self.now {
            self.segments.push(Segment::killed(run.job, machine, run.start, self.now.clone()));
        }
        self.status[run.job] = JobStatus::Waiting;
        self.observed.push(Observed::Kill { job: run.job, machine });
        self.log(Event::Kill { t: self.now.clone(), job: run.job, machine });
        self.actions += 1;
        Some(run.job)
    }

    /// Requests an `on_wakeup` call at time `t` (ignored if in the past).
    pub fn wake_at(&mut self, t: TimeQ) {
        if t >= self.now {
            self.wakeups.insert(t);
        }
    }

    pub fn log(&mut self, ev: Event) {
        if let Some(tr) = &mut self.transcript {
            tr.push(ev);
        }
    }

    pub fn recording(&self) -> bool {
        self.transcript.is_some()
    }
}

/// An online scheduling rule.
pub trait Policy {
    fn on_release(&mut self, ctx: &mut Ctx, job: &Job);
    fn on_completion(&mut self, _ctx: &mut Ctx, _job: JobId, _machine: MachineIndex) {}
    fn on_wakeup(&mut self, _ctx: &mut Ctx) {}
    /// Called after every batch of events; should fill idle machines.
    fn dispatch(&mut self, ctx: &mut Ctx);
    fn model(&self) -> Model;
}

/// Where jobs come from: a fixed list or an adaptive adversary.
pub trait Source {
    /// Next instant (≥ now) at which the source wants to act.
    fn next_time(&self) -> Option<TimeQ>;
    /// Acts at `now`; released jobs must have `release ≥ now`.
    fn fire(&mut self, now: &TimeQ, out: &mut Vec<Job>);
    fn observe(&mut self, _now: &TimeQ, _ev: &Observed) {}
    fn allow_zero_size(&self) -> bool {
        false
    }
    fn phase_marks(&mut self) -> Vec<(TimeQ, String)> {
        Vec::new()
    }
}

/// Releases the jobs of a fixed instance.
pub struct FixedSource {
    jobs: Option<Vec<Job>>,
    allow_zero: bool,
}

impl FixedSource {
    pub fn new(instance: &Instance) -> Self {
        FixedSource { jobs: Some(instance.jobs().to_vec()), allow_zero: instance.allow_zero_size() }
    }
}

impl Source for FixedSource {
    fn next_time(&self) -> Option<TimeQ> {
        self.jobs.as_ref().map(|_| TimeQ::zero())
    }
    fn fire(&mut self, _now: &TimeQ, out: &mut Vec<Job>) {
        out.extend(self.jobs.take().unwrap_or_default());
    }
    fn allow_zero_size(&self) -> bool {
        self.allow_zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Finished,
    HorizonExceeded,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub schedule: Schedule,
    /// Every job the source released, indexed by id.
    pub jobs: Vec<Job>,
    pub transcript: Vec<Event>,
    pub termination: Termination,
    /// Time at which the run stopped.
    pub end_time: TimeQ,
    pub allow_zero_size: bool,
}

impl RunResult {
    pub fn instance(&self, machines: usize) -> Result<Instance> {
        Instance::new(machines, self.jobs.clone(), self.allow_zero_size)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EngineOptions {
    pub record_transcript: bool,
    /// Stop (reporting `HorizonExceeded`) rather than advance past this time.
    pub horizon: Option<TimeQ>,
}

pub fn simulate<P: Policy + ?Sized, S: Source + ?Sized>(
    machines: usize,
    policy: &mut P,
    source: &mut S,
    opts: &EngineOptions,
) -> Result<RunResult> {
    if machines == 0 {
        return Err(Error::Config("machine count must be positive".into()));
    }
    let mut ctx = Ctx {
        now: TimeQ::zero(),
        jobs: Vec::new(),
        status: Vec::new(),
        machines: vec![None; machines],
        segments: Vec::new(),
        wakeups: BTreeSet::new(),
        transcript: opts.record_transcript.then(Vec::new),
        observed: Vec::new(),
        actions: 0,
        violation: None,
    };
    let mut queue: BTreeMap<(TimeQ, JobId), ()> = BTreeMap::new();
    let mut unfinished = 0usize;
    let mut fired = Vec::new();
    let mut termination = Termination::Finished;

    let check = |ctx: &mut Ctx| -> Result<()> {
        match ctx.violation.take() {
            Some(v) => Err(Error::Protocol(v)),
            None => Ok(()),
        }
    };

    loop {
        // Settle everything at `now`.
        loop {
            let before = ctx.actions;
            let mut progressed = false;

            for i in 0..machines {
                let done = matches!(&ctx.machines[i], Some(run) if run.end == ctx.now);
                if done {
                    let run = ctx.machines[i].take().expect("running");
                    ctx.segments.push(Segment::completed(run.job, i, run.start, run.end));
                    ctx.status[run.job] = JobStatus::Done;
                    unfinished -= 1;
                    ctx.observed.push(Observed::Complete { job: run.job, machine: i });
                    ctx.log(Event::Complete { t: ctx.now.clone(), job: run.job, machine: i });
                    policy.on_completion(&mut ctx, run.job, i);
                    check(&mut ctx)?;
                    progressed = true;
                }
            }

            for ob in std::mem::take(&mut ctx.observed) {
                source.observe(&ctx.now, &ob);
            }
            while source.next_time().is_some_and(|t| t <= ctx.now) {
                source.fire(&ctx.now, &mut fired);
                for (t, name) in source.phase_marks() {
                    ctx.log(Event::Phase { t, name });
                }
                progressed = true;
                for job in fired.drain(..) {
                    if job.release < ctx.now {
                        return Err(Error::Protocol(format!(
                            "job {} released in the past ({} < {})",
                            job.id, job.release, ctx.now
                        )));
                    }
                    if job.size.is_negative() || (job.size.is_zero() && !source.allow_zero_size()) {
                        return Err(Error::Protocol(format!("job {} has invalid size {}", job.id, job.size)));
                    }
                    let id = job.id;
                    if id >= ctx.jobs.len() {
                        ctx.jobs.resize(id + 1, None);
                        ctx.status.resize(id + 1, JobStatus::Queued);
                    }
                    if ctx.jobs[id].is_some() {
                        return Err(Error::Protocol(format!("job id {id} released twice")));
                    }
                    queue.insert((job.release.clone(), id), ());
                    ctx.jobs[id] = Some(job);
                    unfinished += 1;
                }
            }

            while let Some(entry) = queue.first_entry() {
                if entry.key().0 != ctx.now {
                    break;
                }
                let (_, id) = entry.remove_entry().0;
                ctx.status[id] = JobStatus::Waiting;
                let job = ctx.jobs[id].clone().expect("queued job");
                ctx.log(Event::Release { t: ctx.now.clone(), job: id, p: job.size.clone() });
                policy.on_release(&mut ctx, &job);
                check(&mut ctx)?;
                progressed = true;
            }

            if ctx.wakeups.first() == Some(&ctx.now) {
                ctx.wakeups.pop_first();
                policy.on_wakeup(&mut ctx);
                check(&mut ctx)?;
                progressed = true;
            }

            policy.dispatch(&mut ctx);
            check(&mut ctx)?;
            if !progressed && ctx.actions == before && ctx.observed.is_empty() {
                break;
            }
        }

        let mut next: Option<TimeQ> = None;
        let mut consider = |t: &TimeQ| {
            if next.as_ref().is_none_or(|n| t < n) {
                next = Some(t.clone());
            }
        };
        for run in ctx.machines.iter().flatten() {
            consider(&run.end);
        }
        if let Some(t) = source.next_time() {
            consider(&t);
        }
        if let Some(((t, _), _)) = queue.first_key_value() {
            consider(t);
        }
        if let Some(t) = ctx.wakeups.first() {
            consider(t);
        }
        match next {
            None => {
                if unfinished > 0 {
                    return Err(Error::Stalled { time: ctx.now.to_string(), pending: unfinished });
                }
                break;
            }
            Some(t) => {
                debug_assert!(t > ctx.now, "engine failed to settle");
                if let Some(h) = opts.horizon.as_ref().filter(|h| t > **h) {
                    termination = Termination::HorizonExceeded;
                    ctx.now = h.clone();
                    break;
                }
                ctx.now = t;
            }
        }
    }

    let jobs: Vec<Job> = ctx.jobs.into_iter().map(|j| j.expect("dense job ids")).collect();
    Ok(RunResult {
        schedule: Schedule::with_segments(policy.model(), ctx.segments),
        jobs,
        transcript: ctx.transcript.unwrap_or_default(),
        termination,
        end_time: ctx.now,
        allow_zero_size: source.allow_zero_size(),
    })
}

/// Runs a policy on a fixed instance.
pub fn run_on_instance<P: Policy + ?Sized>(instance: &Instance, policy: &mut P, opts: &EngineOptions) -> Result<RunResult> {
    let mut src = FixedSource::new(instance);
    simulate(instance.machines(), policy, &mut src, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Starts any waiting job in id order on the lowest idle machine.
    struct Eager {
        waiting: BTreeSet<JobId>,
    }

    impl Policy for Eager {
        fn on_release(&mut self, _ctx: &mut Ctx, job: &Job) {
            self.waiting.insert(job.id);
        }
        fn dispatch(&mut self, ctx: &mut Ctx) {
            for i in 0..ctx.machines() {
                if ctx.is_idle(i) {
                    if let Some(j) = self.waiting.pop_first() {
                        ctx.start(i, j);
                    }
                }
            }
        }
        fn model(&self) -> Model {
            Model::NonPreemptive
        }
    }

    #[test]
    fn zero_size_jobs_settle_at_one_instant() {
        let jobs = vec![
            Job::new(0, TimeQ::zero(), TimeQ::zero()),
            Job::new(1, TimeQ::zero(), TimeQ::zero()),
            Job::new(2, TimeQ::zero(), TimeQ::one()),
        ];
        let inst = Instance::new(1, jobs, true).unwrap();
        let res = run_on_instance(&inst, &mut Eager { waiting: BTreeSet::new() }, &EngineOptions::default()).unwrap();
        let s = &res.schedule;
        assert_eq!(s.segments.len(), 3);
        assert_eq!(s.completion(2), Some(TimeQ::one()));
        assert!(crate::validate::validate_schedule(&inst, s).unwrap().is_ok());
    }

    #[test]
    fn protocol_violation_is_reported() {
        struct Bad;
        impl Policy for Bad {
            fn on_release(&mut self, ctx: &mut Ctx, _job: &Job) {
                ctx.start(0, 7);
            }
            fn dispatch(&mut self, _ctx: &mut Ctx) {}
            fn model(&self) -> Model {
                Model::NonPreemptive
            }
        }
        let inst = Instance::from_pairs(1, &[(TimeQ::zero(), TimeQ::one())]).unwrap();
        assert!(matches!(
            run_on_instance(&inst, &mut Bad, &EngineOptions::default()),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn idle_policy_stalls() {
        struct Idle;
        impl Policy for Idle {
            fn on_release(&mut self, _ctx: &mut Ctx, _job: &Job) {}
            fn dispatch(&mut self, _ctx: &mut Ctx) {}
            fn model(&self) -> Model {
                Model::NonPreemptive
            }
        }
        let inst = Instance::from_pairs(1, &[(TimeQ::zero(), TimeQ::one())]).unwrap();
        assert!(matches!(
            run_on_instance(&inst, &mut Idle, &EngineOptions::default()),
            Err(Error::Stalled { pending: 1, .. })
        ));
    }

    #[test]
    fn transcript_records_lifecycle() {
        let inst = Instance::from_pairs(1, &[(TimeQ::zero(), TimeQ::one()), (TimeQ::zero(), TimeQ::one())]).unwrap();
        let opts = EngineOptions { record_transcript: true, horizon: None };
        let res = run_on_instance(&inst, &mut Eager { waiting: BTreeSet::new() }, &opts).unwrap();
        let kinds: Vec<&str> = res
            .transcript
            .iter()
            .map(|e| match e {
                Event::Release { .. } => "r",
                Event::Start { .. } => "s",
                Event::Complete { .. } => "c",
                _ => "?",
            })
            .collect();
        assert_eq!(kinds, ["r", "r", "s", "c", "s", "c"]);
        let line = serde_json::to_string(&res.transcript[0]).unwrap();
        assert_eq!(line, r#"{"event":"release","t":"0","job":0,"p":"1"}"#);
    }
}
