//! Kill-and-restart without knowing `n`. The estimate `N` doubles whenever
//! the release count exceeds it; after each release every job is relabelled
//! currently-large (top-ℓ by rank and `p ≥ 4P/ℓ`) or currently-small, with
//! `ℓ = ⌊N^α √m⌋`, `α = (√5 − 1)/2`.

use std::collections::{BTreeSet, HashSet};

use crate::engine::{run_on_instance, Ctx, EngineOptions, Event, Policy, RunResult};
use crate::error::Result;
use crate::model::{Instance, Job, JobId, Model, Schedule};
use crate::partition::{absolute_small_bound, RankKey};
use crate::time::TimeQ;

use super::Role;

pub const ALPHA: f64 = 0.618_033_988_749_894_9;

/// `⌊N^α √m⌋` in double precision, at least 1.
pub fn capacity_for(n_estimate: usize, m: usize) -> usize {
    let v = (n_estimate as f64).powf(ALPHA) * (m as f64).sqrt();
    (v.floor() as usize).max(1)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnknownNStats {
    /// Kill events fired because `N` doubled.
    pub type_a_events: usize,
    /// Kill events fired because too many currently-small jobs waited.
    pub type_b_events: usize,
    pub killed_runs: usize,
    pub n_updates: Vec<usize>,
    pub label_flips: usize,
}

#[derive(Debug)]
pub struct UnknownN {
    roles: Vec<Role>,
    n_estimate: usize,
    released: usize,
    work: TimeQ,
    ranked: BTreeSet<(RankKey, JobId)>,
    large: HashSet<JobId>,
    waiting: BTreeSet<(TimeQ, JobId)>,
    pub stats: UnknownNStats,
}

impl UnknownN {
    pub fn new(m: usize) -> Self {
        UnknownN {
            roles: (0..m).map(|i| if i < m / 2 { Role::SmallOnly } else { Role::Mixed }).collect(),
            n_estimate: 1,
            released: 0,
            work: TimeQ::zero(),
            ranked: BTreeSet::new(),
            large: HashSet::new(),
            waiting: BTreeSet::new(),
            stats: UnknownNStats::default(),
        }
    }

    pub fn n_estimate(&self) -> usize {
        self.n_estimate
    }

    pub fn capacity(&self) -> usize {
        capacity_for(self.n_estimate, self.roles.len())
    }

    pub fn is_currently_large(&self, job: JobId) -> bool {
        self.large.contains(&job)
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    fn relabel(&mut self, ctx: &mut Ctx) {
        let cap = self.capacity();
        let bound = absolute_small_bound(&self.work, cap);
        let now_large: HashSet<JobId> = self
            .ranked
            .iter()
            .rev()
            .take(cap)
            .filter(|(k, _)| k.size >= bound)
            .map(|(_, id)| *id)
            .collect();
        let mut flips: Vec<(JobId, bool)> = now_large.difference(&self.large).map(|&j| (j, true)).collect();
        flips.extend(self.large.difference(&now_large).map(|&j| (j, false)));
        flips.sort();
        self.stats.label_flips += flips.len();
        if ctx.recording() {
            for (job, large) in flips {
                ctx.log(Event::LabelFlip { t: ctx.now().clone(), job, large });
            }
        }
        self.large = now_large;
    }

    fn running_large(&self, ctx: &Ctx, small_only: bool) -> Vec<usize> {
        (0..ctx.machines())
            .filter(|&i| !small_only || self.roles[i] == Role::SmallOnly)
            .filter(|&i| ctx.running(i).is_some_and(|r| self.large.contains(&r.job)))
            .collect()
    }

    fn kill_all(&mut self, ctx: &mut Ctx, machines: Vec<usize>) {
        for i in machines {
            if let Some(j) = ctx.kill(i) {
                self.waiting.insert((ctx.job(j).size.clone(), j));
                self.stats.killed_runs += 1;
            }
        }
    }
}

impl Policy for UnknownN {
    fn on_release(&mut self, ctx: &mut Ctx, job: &Job) {
        self.released += 1;
        let updated = self.released > self.n_estimate;
        if updated {
            self.n_estimate *= 2;
            self.stats.n_updates.push(self.released);
            ctx.log(Event::NUpdate { t: ctx.now().clone(), n_estimate: self.n_estimate });
        }
        self.work += &job.size;
        self.ranked.insert((RankKey { size: job.size.clone(), arrival: self.released as u64 }, job.id));
        self.waiting.insert((job.size.clone(), job.id));
        self.relabel(ctx);

        if updated {
            let victims = self.running_large(ctx, true);
            if !victims.is_empty() {
                self.stats.type_a_events += 1;
                self.kill_all(ctx, victims);
            }
        }
        let running = self.running_large(ctx, false);
        if !running.is_empty() {
            let waiting_small = self.waiting.iter().filter(|(_, j)| !self.large.contains(j)).count();
            if waiting_small > self.capacity() {
                self.stats.type_b_events += 1;
                self.kill_all(ctx, running);
            }
        }
    }

    fn dispatch(&mut self, ctx: &mut Ctx) {
        for i in 0..ctx.machines() {
            if self.roles[i] != Role::SmallOnly || !ctx.is_idle(i) {
                continue;
            }
            let pick = self.waiting.iter().find(|(_, j)| !self.large.contains(j)).cloned();
            match pick {
                Some(key) => {
                    self.waiting.remove(&key);
                    ctx.start(i, key.1);
                }
                None => break,
            }
        }
        for i in 0..ctx.machines() {
            if self.roles[i] != Role::Mixed || !ctx.is_idle(i) {
                continue;
            }
            match self.waiting.pop_first() {
                Some((_, j)) => ctx.start(i, j),
                None => break,
            }
        }
    }

    fn model(&self) -> Model {
        Model::KillRestart
    }
}

pub fn run_kill_restart_unknown_n_detailed(instance: &Instance, opts: &EngineOptions) -> Result<(RunResult, UnknownN)> {
    let mut pol = UnknownN::new(instance.machines());
    let res = run_on_instance(instance, &mut pol, opts)?;
    Ok((res, pol))
}

pub fn run_kill_restart_unknown_n(instance: &Instance) -> Result<Schedule> {
    Ok(run_kill_restart_unknown_n_detailed(instance, &EngineOptions::default())?.0.schedule)
}

/// `4 · n^(1−α) / √m`.
pub fn type_b_budget(n: usize, m: usize) -> f64 {
    4.0 * (n as f64).powf(1.0 - ALPHA) / (m as f64).sqrt()
}
