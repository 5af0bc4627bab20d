//! Adaptive adversaries that play against a policy on the shared engine,
//! plus the oblivious probe-then-commit adversary for unknown `n`.

use std::collections::BTreeSet;

use crate::engine::{simulate, EngineOptions, Observed, Policy, RunResult, Source, Termination};
use crate::error::{Error, Result};
use crate::flow::flow_sum;
use crate::model::{Instance, InstanceMeta, Job, JobId, Schedule};
use crate::time::TimeQ;

use super::generators::{left_shift, GadgetRole, GeneratedFamily};

/// Outcome of a duel on the realized instance.
#[derive(Debug, Clone)]
pub struct DuelReport {
    pub run: RunResult,
    /// Every job the adversary released.
    pub instance: Instance,
    /// Total flow; unfinished jobs are charged up to the stopping time.
    pub alg_flow: TimeQ,
    pub finished: bool,
    pub witness: Schedule,
    pub witness_flow: TimeQ,
}

fn charged_flow(run: &RunResult) -> TimeQ {
    let completions = run.schedule.completions(run.jobs.len());
    run.jobs
        .iter()
        .map(|j| {
            let end = completions[j.id].clone().unwrap_or_else(|| run.end_time.clone().max(j.release.clone()));
            &end - &j.release
        })
        .sum()
}

fn play<P: Policy + ?Sized, S: Source>(
    m: usize,
    policy: &mut P,
    source: &mut S,
    horizon: TimeQ,
) -> Result<(RunResult, Instance, TimeQ, bool)> {
    let opts = EngineOptions { record_transcript: true, horizon: Some(horizon) };
    let run = simulate(m, policy, source, &opts)?;
    let instance = run.instance(m)?;
    let finished = run.termination == Termination::Finished;
    let alg_flow = charged_flow(&run);
    Ok((run, instance, alg_flow, finished))
}

// ---------------------------------------------------------------------------
// Single machine, kill-and-restart: force an unsolved long job, then release
// ε-jobs at harmonic thresholds of each of its runs.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartBranch {
    /// Job 0 was running at time 3: ε-groups at 3 and 7.
    BusyAtThree,
    /// Otherwise: one ε-group at 5.
    IdleAtThree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartLbInfo {
    pub branch: Option<RestartBranch>,
    pub t_star: Option<TimeQ>,
    /// The remaining `n − 2 − ⌊n/2⌋` jobs were released at once.
    pub early_exit: bool,
    pub unsolved: Option<JobId>,
    pub phase2_start: Option<TimeQ>,
    pub phase2_jobs: Vec<JobId>,
    /// `n − 2 − ⌊n/2⌋`.
    pub tail: usize,
    pub h_n: TimeQ,
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Open,
    AtThree,
    AwaitGroupStart,
    ReleaseTail(TimeQ),
    Pause(TimeQ),
    Exploit,
    Done,
}

struct RestartLbSource {
    n: usize,
    eps: TimeQ,
    guard: TimeQ,
    thresholds: Vec<TimeQ>,
    stage: Stage,
    next_id: JobId,
    running: Option<(JobId, TimeQ)>,
    completed: BTreeSet<JobId>,
    group: BTreeSet<JobId>,
    left: usize,
    /// Threshold index and release time of the next ε-job in the current run of `u`.
    pending: Option<(usize, TimeQ)>,
    marks: Vec<(TimeQ, String)>,
    info: RestartLbInfo,
}

impl RestartLbSource {
    fn new(n: usize) -> Self {
        let mut partial = Vec::with_capacity(n);
        let mut h = TimeQ::zero();
        for i in 1..=n {
            h += TimeQ::new(1, i as i64);
            partial.push(h.clone());
        }
        let h_n = h;
        let thresholds = partial.iter().map(|h_i| h_i / &h_n).collect();
        let tail = n - 2 - n / 2;
        RestartLbSource {
            n,
            eps: TimeQ::new(1, 2 * (n as i64) * (n as i64)),
            guard: TimeQ::from_int(10 * n as i64 + 1),
            thresholds,
            stage: Stage::Open,
            next_id: 0,
            running: None,
            completed: BTreeSet::new(),
            group: BTreeSet::new(),
            left: tail,
            pending: None,
            marks: Vec::new(),
            info: RestartLbInfo {
                branch: None,
                t_star: None,
                early_exit: false,
                unsolved: None,
                phase2_start: None,
                phase2_jobs: Vec::new(),
                tail,
                h_n,
            },
        }
    }

    fn emit(&mut self, out: &mut Vec<Job>, release: TimeQ, size: TimeQ) -> JobId {
        let id = self.next_id;
        self.next_id += 1;
        out.push(Job::new(id, release, size));
        id
    }

    fn mark(&mut self, t: &TimeQ, name: &str) {
        self.marks.push((t.clone(), name.to_string()));
    }

    /// Arms the next threshold strictly after the elapsed time of `u`'s run.
    fn arm(&mut self, now: &TimeQ) {
        let u = self.info.unsolved.expect("phase 2 has an unsolved job");
        self.pending = match &self.running {
            Some((j, start)) if *j == u => {
                let elapsed = now - start;
                self.thresholds.iter().position(|x| *x > elapsed).map(|i| (i, start + &self.thresholds[i]))
            }
            _ => None,
        };
    }

    fn release_rest(&mut self, now: &TimeQ, out: &mut Vec<Job>) {
        for _ in 0..self.left {
            let id = self.emit(out, now.clone(), self.eps.clone());
            self.info.phase2_jobs.push(id);
        }
        self.left = 0;
        self.pending = None;
        self.stage = Stage::Done;
        self.mark(now, "done");
    }
}

impl Source for RestartLbSource {
    fn next_time(&self) -> Option<TimeQ> {
        match &self.stage {
            Stage::Open => Some(TimeQ::zero()),
            Stage::AtThree => Some(TimeQ::from_int(3)),
            Stage::AwaitGroupStart => Some(self.guard.clone()),
            Stage::ReleaseTail(t) | Stage::Pause(t) => Some(t.clone()),
            Stage::Exploit => Some(self.pending.as_ref().map_or_else(|| self.guard.clone(), |(_, t)| t.clone())),
            Stage::Done => None,
        }
    }

    fn fire(&mut self, now: &TimeQ, out: &mut Vec<Job>) {
        match self.stage.clone() {
            Stage::Open => {
                self.emit(out, TimeQ::zero(), TimeQ::from_int(4));
                self.emit(out, TimeQ::from_int(2), TimeQ::one());
                self.mark(now, "phase1");
                self.stage = Stage::AtThree;
            }
            Stage::AtThree => {
                let busy = self.running.as_ref().is_some_and(|(j, _)| *j == 0);
                let half = self.n / 2;
                let (branch, t_star) = if busy {
                    let a = self.n / 4;
                    for _ in 0..a {
                        self.emit(out, TimeQ::from_int(3), self.eps.clone());
                    }
                    for _ in a..half {
                        let id = self.emit(out, TimeQ::from_int(7), self.eps.clone());
                        self.group.insert(id);
                    }
                    (RestartBranch::BusyAtThree, TimeQ::from_int(7))
                } else {
                    for _ in 0..half {
                        let id = self.emit(out, TimeQ::from_int(5), self.eps.clone());
                        self.group.insert(id);
                    }
                    (RestartBranch::IdleAtThree, TimeQ::from_int(5))
                };
                self.mark(now, if busy { "busy-at-3" } else { "idle-at-3" });
                self.info.branch = Some(branch);
                self.info.t_star = Some(t_star);
                self.stage = Stage::AwaitGroupStart;
            }
            Stage::ReleaseTail(_) => {
                self.info.early_exit = true;
                self.mark(now, "early-exit");
                self.release_rest(now, out);
            }
            Stage::Pause(_) => {
                // Prefer a job that is neither done nor running.
                let open: Vec<JobId> = [0, 1].into_iter().filter(|j| !self.completed.contains(j)).collect();
                let idle = open.iter().copied().find(|j| self.running.as_ref().is_none_or(|(r, _)| r != j));
                match idle.or(open.first().copied()) {
                    Some(u) => {
                        self.info.unsolved = Some(u);
                        self.info.phase2_start = Some(now.clone());
                        self.mark(now, "phase2");
                        self.stage = Stage::Exploit;
                        self.arm(now);
                    }
                    None => self.release_rest(now, out),
                }
            }
            Stage::Exploit => match self.pending.take() {
                Some((_, t)) if t == *now => {
                    let id = self.emit(out, now.clone(), self.eps.clone());
                    self.info.phase2_jobs.push(id);
                    self.left -= 1;
                    if self.left == 0 {
                        self.stage = Stage::Done;
                        self.mark(now, "done");
                    } else {
                        self.arm(now);
                    }
                }
                // Guard reached while waiting: nothing to do.
                other => self.pending = other,
            },
            Stage::AwaitGroupStart | Stage::Done => {}
        }
    }

    fn observe(&mut self, now: &TimeQ, ev: &Observed) {
        match ev {
            Observed::Start { job, .. } => {
                self.running = Some((*job, now.clone()));
                if self.stage == Stage::AwaitGroupStart && self.group.contains(job) {
                    let t_star = self.info.t_star.clone().expect("set with the group");
                    let both_done = self.completed.contains(&0) && self.completed.contains(&1);
                    self.stage = if both_done || now - &t_star >= TimeQ::one() {
                        Stage::ReleaseTail(now.clone())
                    } else {
                        let wait = TimeQ::from_int((self.n / 2) as i64) * self.eps.clone();
                        Stage::Pause(now + &wait)
                    };
                }
                if self.stage == Stage::Exploit && Some(*job) == self.info.unsolved {
                    self.arm(now);
                }
            }
            Observed::Kill { job, .. } | Observed::Complete { job, .. } => {
                if self.running.as_ref().is_some_and(|(j, _)| j == job) {
                    self.running = None;
                }
                if matches!(ev, Observed::Complete { .. }) {
                    self.completed.insert(*job);
                }
                if self.stage == Stage::Exploit && Some(*job) == self.info.unsolved {
                    self.pending = None;
                    if matches!(ev, Observed::Complete { .. }) && self.left > 0 {
                        // Solved before the thresholds ran out: release what
                        // is left now so the instance still has n jobs.
                        self.stage = Stage::ReleaseTail(now.clone());
                    }
                }
            }
        }
    }

    fn phase_marks(&mut self) -> Vec<(TimeQ, String)> {
        std::mem::take(&mut self.marks)
    }
}

/// Single-machine witness for the realized instance: in the busy branch run
/// job 1 at 2, the ε-group at 3, then job 0; otherwise job 0 at 0 then job
/// 1. Everything else follows in release order.
fn restart_witness(instance: &Instance, info: &RestartLbInfo) -> Schedule {
    let jobs: Vec<Job> = {
        let mut v = instance.jobs().to_vec();
        v.sort_by_key(|j| j.id);
        v
    };
    let three = TimeQ::from_int(3);
    let mut head: Vec<JobId> = match info.branch {
        Some(RestartBranch::BusyAtThree) => {
            let mut h = vec![1];
            h.extend(jobs.iter().filter(|j| j.id >= 2 && j.release == three).map(|j| j.id));
            h.push(0);
            h
        }
        _ => vec![0, 1],
    };
    let rest: Vec<JobId> = instance.jobs().iter().map(|j| j.id).filter(|id| !head.contains(id)).collect();
    head.extend(rest);
    left_shift(&jobs, &[head])
}

/// Plays the two-phase adversary against `policy` on one machine.
pub fn duel_restart_lb<P: Policy + ?Sized>(policy: &mut P, n: usize) -> Result<(DuelReport, RestartLbInfo)> {
    if n < 8 {
        return Err(Error::Config(format!("restart duel needs n ≥ 8, got {n}")));
    }
    let mut src = RestartLbSource::new(n);
    let horizon = TimeQ::from_int(10 * n as i64);
    let (run, instance, alg_flow, finished) = play(1, policy, &mut src, horizon)?;
    let witness = restart_witness(&instance, &src.info);
    let witness_flow = flow_sum(&instance, &witness)?;
    let report = DuelReport { run, instance, alg_flow, finished, witness, witness_flow };
    Ok((report, src.info))
}

/// Flow charged to the phase-2 jobs and the unsolved job by the end of the run.
pub fn phase2_flow(report: &DuelReport, info: &RestartLbInfo) -> TimeQ {
    let completions = report.run.schedule.completions(report.run.jobs.len());
    let end = |j: JobId| completions[j].clone().unwrap_or_else(|| report.run.end_time.clone());
    let mut total = TimeQ::zero();
    for &j in &info.phase2_jobs {
        total += end(j) - report.run.jobs[j].release.clone();
    }
    total
}

// ---------------------------------------------------------------------------
// Many machines, no restarts: a unit job, then once it starts, ⌈n/m⌉
// batches of m jobs of size 1/n every 1/n.

#[derive(Debug, Clone, PartialEq)]
pub struct Nm2Info {
    pub first_start: Option<TimeQ>,
    pub batches: usize,
    /// `m·⌈n/m⌉`: the last batch is padded to `m` jobs.
    pub small_jobs: usize,
}

struct Nm2Source {
    n: usize,
    m: usize,
    guard: TimeQ,
    opened: bool,
    fire_at: Option<TimeQ>,
    done: bool,
    info: Nm2Info,
    marks: Vec<(TimeQ, String)>,
}

impl Source for Nm2Source {
    fn next_time(&self) -> Option<TimeQ> {
        if !self.opened {
            return Some(TimeQ::zero());
        }
        if self.done {
            return None;
        }
        Some(self.fire_at.clone().unwrap_or_else(|| self.guard.clone()))
    }

    fn fire(&mut self, now: &TimeQ, out: &mut Vec<Job>) {
        if !self.opened {
            self.opened = true;
            out.push(Job::new(0, TimeQ::zero(), TimeQ::one()));
            return;
        }
        if self.fire_at.as_ref() != Some(now) {
            return;
        }
        let n = self.n as i64;
        let size = TimeQ::new(1, n);
        let mut id = 1;
        for b in 1..=self.info.batches as i64 {
            let r = now + &TimeQ::new(b, n);
            for _ in 0..self.m {
                out.push(Job::new(id, r.clone(), size.clone()));
                id += 1;
            }
        }
        self.done = true;
        self.marks.push((now.clone(), "batches".into()));
    }

    fn observe(&mut self, now: &TimeQ, ev: &Observed) {
        if let Observed::Start { .. } = ev {
            if self.info.first_start.is_none() {
                self.info.first_start = Some(now.clone());
                self.fire_at = Some(now.clone());
            }
        }
    }

    fn phase_marks(&mut self) -> Vec<(TimeQ, String)> {
        std::mem::take(&mut self.marks)
    }
}

/// `Σ_{i=1}^{⌊n/m⌋} i/n`.
pub fn nm2_flow_bound(n: usize, m: usize) -> TimeQ {
    let b = (n / m) as i64;
    TimeQ::new(b * (b + 1) / 2, n as i64)
}

pub fn duel_nm2<P: Policy + ?Sized>(policy: &mut P, n: usize, m: usize) -> Result<(DuelReport, Nm2Info)> {
    if n == 0 || m == 0 {
        return Err(Error::Config("nm2 duel needs n ≥ 1 and m ≥ 1".into()));
    }
    let batches = n.div_ceil(m);
    let mut src = Nm2Source {
        n,
        m,
        guard: TimeQ::from_int(10 * n as i64 + 1),
        opened: false,
        fire_at: None,
        done: false,
        info: Nm2Info { first_start: None, batches, small_jobs: batches * m },
        marks: Vec::new(),
    };
    let (run, instance, alg_flow, finished) = play(m, policy, &mut src, TimeQ::from_int(10 * n as i64))?;
    // Smalls run at release, batch slot g on machine g. The unit job runs
    // at 0 if it is out of the way by the first batch, else after the last.
    let mut jobs: Vec<Job> = instance.jobs().to_vec();
    jobs.sort_by_key(|j| j.id);
    let mut orders: Vec<Vec<JobId>> = vec![Vec::new(); m];
    for j in 1..jobs.len() {
        orders[(j - 1) % m].push(j);
    }
    let early = src.info.first_start.as_ref().is_none_or(|t| *t >= TimeQ::one());
    if early {
        orders[0].insert(0, 0);
    } else {
        orders[0].push(0);
    }
    let witness = left_shift(&jobs, &orders);
    let witness_flow = flow_sum(&instance, &witness)?;
    let report = DuelReport { run, instance, alg_flow, finished, witness, witness_flow };
    Ok((report, src.info))
}

// ---------------------------------------------------------------------------
// Unknown n: estimate when the policy starts a lone size-2 job, then commit.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownNClass {
    /// Starts in `[t, t+1)` with estimated probability at least `y`.
    TypeA { t: u64 },
    /// Every unit window in `[1, x+1)` has estimated mass below `y`.
    TypeB,
}

#[derive(Debug, Clone)]
pub struct UnknownNDuel {
    pub class: UnknownNClass,
    pub x: u64,
    pub y: TimeQ,
    pub trials: u64,
    /// Probe runs whose start fell in `[t, t+1)`, for `t = 1..=x`.
    pub window_counts: Vec<u64>,
    /// Probe runs that never started the job.
    pub unstarted: u64,
    pub family: GeneratedFamily,
}

impl UnknownNDuel {
    /// Largest estimated window mass minus `y`: how clear-cut the
    /// classification was.
    pub fn margin(&self) -> f64 {
        let best = self.window_counts.iter().copied().max().unwrap_or(0) as f64 / self.trials as f64;
        best - self.y.to_f64()
    }
}

/// Probes `probe(instance, trial)` on the one-job instance `trials` times.
/// Type A releases `n1` zero-size jobs at `t + 1` (one machine) or `n1`
/// jobs of size `1/k`, `m` at each of `t + 1 + i/k` (several machines);
/// Type B releases `n0` zero-size jobs at `n0 + 1`.
pub fn duel_unknown_n<F>(mut probe: F, n0: usize, n1: usize, m: usize, trials: u64) -> Result<UnknownNDuel>
where
    F: FnMut(&Instance, u64) -> Result<Schedule>,
{
    if trials == 0 || n0 == 0 || m == 0 {
        return Err(Error::Config("unknown-n duel needs n0, m and trials ≥ 1".into()));
    }
    let x = n0 as u64;
    let y = TimeQ::new(1, 2 * n0 as i64);
    let lone = Instance::new(m, vec![Job::new(0, TimeQ::zero(), TimeQ::from_int(2))], false)?;
    let mut counts = vec![0u64; n0];
    let mut unstarted = 0;
    for trial in 0..trials {
        let s = probe(&lone, trial)?;
        match s.first_start(0) {
            Some(start) => {
                let w = start.floor();
                if w >= 1.into() && w <= x.into() {
                    let w: u64 = w.try_into().expect("window fits");
                    counts[(w - 1) as usize] += 1;
                }
            }
            None => unstarted += 1,
        }
    }
    // count/trials ≥ 1/(2 n0)  ⇔  2 n0 · count ≥ trials
    let class = match counts.iter().position(|&c| 2 * x * c >= trials) {
        Some(i) => UnknownNClass::TypeA { t: i as u64 + 1 },
        None => UnknownNClass::TypeB,
    };

    let mut jobs = vec![Job::new(0, TimeQ::zero(), TimeQ::from_int(2))];
    let mut roles = vec![GadgetRole::Large { batch: 0 }];
    let mut orders: Vec<Vec<JobId>> = vec![vec![0]];
    orders.resize(m, Vec::new());
    let mut zero = false;
    let family = match class {
        UnknownNClass::TypeA { t } if m == 1 => {
            zero = true;
            for _ in 0..n1 {
                let id = jobs.len();
                jobs.push(Job::new(id, TimeQ::from_int(t as i64 + 1), TimeQ::zero()));
                orders[0].push(id);
            }
            "unknown-n-a"
        }
        UnknownNClass::TypeA { t } => {
            let k = n1.div_ceil(m).max(1) as i64;
            for i in 0..k {
                let r = TimeQ::from_int(t as i64 + 1) + TimeQ::new(i, k);
                for order in orders.iter_mut() {
                    let id = jobs.len();
                    jobs.push(Job::new(id, r.clone(), TimeQ::new(1, k)));
                    order.push(id);
                }
            }
            "unknown-n-a"
        }
        UnknownNClass::TypeB => {
            zero = true;
            for _ in 0..n0 {
                let id = jobs.len();
                jobs.push(Job::new(id, TimeQ::from_int(x as i64 + 1), TimeQ::zero()));
                orders[0].push(id);
            }
            "unknown-n-b"
        }
    };
    roles.resize(jobs.len(), GadgetRole::FixedSmall { batch: 0 });
    let witness = left_shift(&jobs, &orders);
    let mut meta = InstanceMeta { family: family.into(), n: Some(jobs.len()), m: Some(m), ..Default::default() };
    if let UnknownNClass::TypeA { t } = class {
        meta.extra.insert("t".into(), serde_json::json!(t));
    }
    meta.extra.insert("n0".into(), serde_json::json!(n0));
    meta.extra.insert("trials".into(), serde_json::json!(trials));
    let instance = Instance::new(m, jobs, zero)?.with_meta(meta);
    let witness_flow = flow_sum(&instance, &witness)?;
    Ok(UnknownNDuel {
        class,
        x,
        y,
        trials,
        window_counts: counts,
        unstarted,
        family: GeneratedFamily { instance, witness, witness_flow, roles },
    })
}
