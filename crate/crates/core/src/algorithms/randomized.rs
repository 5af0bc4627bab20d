//! Randomized non-preemptive scheduling by plan reconstruction.
//!
//! On every arrival the plan is rebuilt: small jobs and proxies are laid out
//! by NSJF, then each unproxied large job `j` (in release order) is inserted
//! on its machine at the first instant where the idle time accumulated
//! since `r_j` reaches `w_j · p_j`. Later jobs on that machine keep their
//! order and are pushed right as needed. Because the plan never changes
//! before the latest arrival, the executed schedule equals the final plan.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Instance, Job, JobId, Model, Provenance, Schedule, Segment};
use crate::nsjf::run_nsjf;
use crate::partition::{Class, Displacement, PartitionState};
use crate::time::{isqrt, TimeQ};

use super::rng::RngPolicy;
use super::sqrt_nm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandConfig {
    /// Active-large capacity ℓ.
    pub capacity: usize,
    /// Patience values are drawn from `1..=patience_max`.
    pub patience_max: u64,
    /// Whether each large job draws its own machine.
    pub random_machine: bool,
    pub rng: RngPolicy,
}

impl RandConfig {
    /// `ℓ = ⌊√n⌋`, patience up to `⌊√n⌋`, single machine.
    pub fn single(n: usize, seed: u64) -> Self {
        let s = (isqrt(n as u128) as usize).max(1);
        RandConfig { capacity: s, patience_max: s as u64, random_machine: false, rng: RngPolicy::new(seed) }
    }

    /// `ℓ = ⌊√(nm)⌋`, patience up to `⌊√(n/m)⌋` (1 when that is 0), random machine.
    pub fn multi(n: usize, m: usize, seed: u64) -> Self {
        let w = (isqrt((n / m.max(1)) as u128) as u64).max(1);
        RandConfig { capacity: sqrt_nm(n, m), patience_max: w, random_machine: true, rng: RngPolicy::new(seed) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Slot {
    /// Original job id (proxies are attributed to the job they stand for).
    job: JobId,
    size: TimeQ,
    start: TimeQ,
}

impl Slot {
    fn end(&self) -> TimeQ {
        &self.start + &self.size
    }
}

/// First instant `t ≥ release` at which the idle time of `timeline` in
/// `[release, t)` reaches `work`, and the index before which a job starting
/// at `t` belongs.
pub(crate) fn insertion_point(timeline: &[(TimeQ, TimeQ)], release: &TimeQ, work: &TimeQ) -> (TimeQ, usize) {
    let mut cursor = release.clone();
    let mut acc = TimeQ::zero();
    for (idx, (start, end)) in timeline.iter().enumerate() {
        if *end <= cursor {
            continue;
        }
        if *start > cursor {
            let gap = start - &cursor;
            if &acc + &gap >= *work {
                return (&cursor + &(work - &acc), idx);
            }
            acc += gap;
        }
        cursor = end.clone();
    }
    (&cursor + &(work - &acc), timeline.len())
}

/// Candidate start times for patience values `1..=max_patience`.
pub fn insertion_candidates(timeline: &[(TimeQ, TimeQ)], release: &TimeQ, size: &TimeQ, max_patience: u64) -> Vec<TimeQ> {
    (1..=max_patience)
        .map(|w| insertion_point(timeline, release, &(size * &TimeQ::from(w as usize))).0)
        .collect()
}

fn timeline_of(slots: &[Slot]) -> Vec<(TimeQ, TimeQ)> {
    slots.iter().map(|s| (s.start.clone(), s.end())).collect()
}

struct Planner<'a> {
    instance: &'a Instance,
    cfg: RandConfig,
    m: usize,
    /// Small jobs and proxies, as NSJF input.
    small: Vec<Job>,
    proxy_of: HashMap<JobId, JobId>,
    /// Unproxied large jobs in arrival order with (patience, machine).
    large: Vec<(JobId, u64, usize)>,
}

impl<'a> Planner<'a> {
    fn new(instance: &'a Instance, cfg: RandConfig) -> Self {
        Planner { instance, cfg, m: instance.machines(), small: Vec::new(), proxy_of: HashMap::new(), large: Vec::new() }
    }

    fn plan(&self) -> Vec<Vec<Slot>> {
        let s1 = run_nsjf(&self.small, self.m, &vec![TimeQ::zero(); self.m]);
        let mut machines: Vec<Vec<Slot>> = vec![Vec::new(); self.m];
        for seg in s1.segments {
            let job = self.proxy_of.get(&seg.job).copied().unwrap_or(seg.job);
            machines[seg.machine].push(Slot { job, size: seg.len(), start: seg.start });
        }
        for list in &mut machines {
            list.sort_by(|a, b| a.start.cmp(&b.start));
        }
        for &(j, w, machine) in &self.large {
            let job = self.instance.job(j);
            let list = &mut machines[machine];
            let work = &job.size * &TimeQ::from(w as usize);
            let (t, idx) = insertion_point(&timeline_of(list), &job.release, &work);
            list.insert(idx, Slot { job: j, size: job.size.clone(), start: t });
            for k in idx + 1..list.len() {
                let prev_end = list[k - 1].end();
                if list[k].start < prev_end {
                    list[k].start = prev_end;
                }
            }
        }
        machines
    }

    fn start_in_plan(plan: &[Vec<Slot>], job: JobId) -> Option<TimeQ> {
        plan.iter().flatten().find(|s| s.job == job).map(|s| s.start.clone())
    }

    /// Processes one arrival. `plan_cache` holds the previous round's plan
    /// if it has been built.
    fn arrive(&mut self, state: &mut PartitionState, job: &Job, plan_cache: &mut Option<Vec<Vec<Slot>>>) {
        let out = state.classify(job, |evicted| {
            let plan = plan_cache.get_or_insert_with(|| self.plan());
            Self::start_in_plan(plan, evicted).is_some_and(|s| s >= job.release)
        });
        match out.class {
            Class::Small => self.small.push(job.clone()),
            Class::Large => {
                let w = self.cfg.rng.patience(job.id, self.cfg.patience_max);
                let machine = if self.cfg.random_machine { self.cfg.rng.machine(job.id, self.m) } else { 0 };
                self.large.push((job.id, w, machine));
            }
        }
        if let Some((evicted, Displacement::Proxy(proxy))) = out.displaced {
            self.large.retain(|&(id, _, _)| id != evicted);
            debug_assert_eq!(proxy.provenance, Provenance::ProxyOf(evicted));
            self.proxy_of.insert(proxy.id, evicted);
            self.small.push(proxy);
        }
    }
}

fn to_schedule(plan: Vec<Vec<Slot>>) -> Schedule {
    let segments = plan
        .into_iter()
        .enumerate()
        .flat_map(|(i, list)| {
            list.into_iter().map(move |s| {
                let end = s.end();
                Segment::completed(s.job, i, s.start, end)
            })
        })
        .collect();
    Schedule::with_segments(Model::NonPreemptive, segments)
}

/// Runs the reconstruction algorithm, rebuilding the plan only when an
/// eviction needs the previous plan and once at the end.
pub fn run_randomized(instance: &Instance, cfg: RandConfig) -> Result<Schedule> {
    let mut planner = Planner::new(instance, cfg);
    let mut state = PartitionState::new(cfg.capacity, instance.n());
    for job in instance.jobs() {
        let mut cache = None;
        planner.arrive(&mut state, job, &mut cache);
    }
    Ok(to_schedule(planner.plan()))
}

pub fn run_rand_single(instance: &Instance, seed: u64) -> Result<Schedule> {
    if instance.machines() != 1 {
        return Err(Error::Config(format!(
            "single-machine randomized algorithm needs m = 1, got {}",
            instance.machines()
        )));
    }
    run_randomized(instance, RandConfig::single(instance.n(), seed))
}

pub fn run_rand_multi(instance: &Instance, seed: u64) -> Result<Schedule> {
    run_randomized(instance, RandConfig::multi(instance.n(), instance.machines(), seed))
}

/// The plan after one arrival.
#[derive(Debug, Clone)]
pub struct Round {
    pub arrival: JobId,
    pub release: TimeQ,
    pub plan: Schedule,
}

/// Rebuilds and returns the plan after every arrival, for stability checks.
pub fn rand_rounds(instance: &Instance, cfg: RandConfig) -> Vec<Round> {
    let mut planner = Planner::new(instance, cfg);
    let mut state = PartitionState::new(cfg.capacity, instance.n());
    let mut rounds = Vec::with_capacity(instance.n());
    let mut cache = None;
    for job in instance.jobs() {
        planner.arrive(&mut state, job, &mut cache);
        let plan = planner.plan();
        rounds.push(Round { arrival: job.id, release: job.release.clone(), plan: to_schedule(plan.clone()) });
        cache = Some(plan);
    }
    rounds
}

/// Segments of `plan` that start before `t`.
pub fn prefix_before(plan: &Schedule, t: &TimeQ) -> Vec<Segment> {
    plan.segments.iter().filter(|s| s.start < *t).cloned().collect()
}

/// Stitches the per-round plans into the executed schedule: the part of
/// round `i`'s plan starting in `[r_i, r_{i+1})`, with the last round kept
/// whole. Returns `None` if some round revised its predecessor's prefix.
pub fn stitch_rounds(rounds: &[Round]) -> Option<Schedule> {
    for w in rounds.windows(2) {
        if prefix_before(&w[0].plan, &w[1].release) != prefix_before(&w[1].plan, &w[1].release) {
            return None;
        }
    }
    let mut segments = Vec::new();
    for (i, round) in rounds.iter().enumerate() {
        let lo = &round.release;
        let hi = rounds.get(i + 1).map(|r| &r.release);
        segments.extend(
            round
                .plan
                .segments
                .iter()
                .filter(|s| s.start >= *lo && hi.is_none_or(|h| s.start < *h))
                .cloned(),
        );
    }
    if let Some(first) = rounds.first() {
        segments.extend(prefix_before(&first.plan, &first.release));
    }
    Some(Schedule::with_segments(Model::NonPreemptive, segments))
}
