//! Deterministic kill-and-restart policy. Small-only machines serve small
//! jobs; mixed machines serve the smallest waiting unproxied job. A counter
//! of small jobs released while an active large job runs triggers killing
//! every running active large job when it reaches `⌊√(nm)⌋`.

use std::collections::BTreeSet;

use crate::engine::{run_on_instance, Ctx, EngineOptions, Event, JobStatus, Policy, RunResult};
use crate::error::Result;
use crate::model::{Instance, Job, JobId, MachineIndex, Model, Schedule};
use crate::partition::{Class, Displacement, PartitionState};
use crate::time::TimeQ;

use super::{sqrt_nm, Role};

/// A kill event: when it happened, the counter value that triggered it, and
/// the jobs killed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KillEvent {
    pub time: TimeQ,
    pub counter: usize,
    pub jobs: Vec<JobId>,
}

#[derive(Debug)]
pub struct KillRestart {
    threshold: usize,
    roles: Vec<Role>,
    part: PartitionState,
    counter: usize,
    /// `(size, run-id, original)` for small jobs and proxies.
    waiting_small: BTreeSet<(TimeQ, JobId, JobId)>,
    /// Unproxied large jobs that are waiting (never started or killed).
    waiting_large: BTreeSet<(TimeQ, JobId)>,
    pub kills: Vec<KillEvent>,
    /// Originals run through the small queue (themselves or via a proxy).
    small_runs: BTreeSet<JobId>,
}

impl KillRestart {
    pub fn new(n: usize, m: usize) -> Self {
        let threshold = sqrt_nm(n, m);
        let roles = (0..m).map(|i| if i < m / 2 { Role::SmallOnly } else { Role::Mixed }).collect();
        KillRestart {
            threshold,
            roles,
            part: PartitionState::new(threshold, n),
            counter: 0,
            waiting_small: BTreeSet::new(),
            waiting_large: BTreeSet::new(),
            kills: Vec::new(),
            small_runs: BTreeSet::new(),
        }
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn ran_as_small(&self, job: JobId) -> bool {
        self.small_runs.contains(&job)
    }

    pub fn partition(&self) -> &PartitionState {
        &self.part
    }

    fn active_large_running(&self, ctx: &Ctx) -> Vec<MachineIndex> {
        (0..ctx.machines())
            .filter(|&i| {
                ctx.running(i)
                    .is_some_and(|r| self.part.is_active_large(r.job) && !self.small_runs.contains(&r.job))
            })
            .collect()
    }
}

impl Policy for KillRestart {
    fn on_release(&mut self, ctx: &mut Ctx, job: &Job) {
        let out = self.part.classify_refined(job, |id| ctx.status(id) == JobStatus::Waiting);
        let mut displaced = None;
        let mut proxy_id = None;
        if let Some((evicted, disp)) = &out.displaced {
            displaced = Some(*evicted);
            if let Displacement::Proxy(proxy) = disp {
                let size = ctx.job(*evicted).size.clone();
                self.waiting_large.remove(&(size, *evicted));
                self.waiting_small.insert((proxy.size.clone(), proxy.id, *evicted));
                proxy_id = Some(proxy.id);
            }
        }
        if ctx.recording() {
            ctx.log(Event::Classify {
                t: ctx.now().clone(),
                job: job.id,
                large: out.class == Class::Large,
                displaced,
                proxy: proxy_id,
            });
        }
        match out.class {
            Class::Large => {
                self.waiting_large.insert((job.size.clone(), job.id));
            }
            Class::Small => {
                self.waiting_small.insert((job.size.clone(), job.id, job.id));
                let running = self.active_large_running(ctx);
                if !running.is_empty() {
                    self.counter += 1;
                    if self.counter == self.threshold {
                        let mut killed = Vec::new();
                        for i in running {
                            if let Some(j) = ctx.kill(i) {
                                self.waiting_large.insert((ctx.job(j).size.clone(), j));
                                killed.push(j);
                            }
                        }
                        self.kills.push(KillEvent { time: ctx.now().clone(), counter: self.counter, jobs: killed });
                        self.counter = 0;
                    }
                }
            }
        }
    }

    fn dispatch(&mut self, ctx: &mut Ctx) {
        for i in 0..ctx.machines() {
            if self.roles[i] != Role::SmallOnly || !ctx.is_idle(i) {
                continue;
            }
            match self.waiting_small.pop_first() {
                Some((_, _, orig)) => {
                    self.small_runs.insert(orig);
                    ctx.start(i, orig);
                }
                None => break,
            }
        }
        for i in 0..ctx.machines() {
            if self.roles[i] != Role::Mixed || !ctx.is_idle(i) {
                continue;
            }
            let small = self.waiting_small.first().map(|(s, id, _)| (s.clone(), *id));
            let large = self.waiting_large.first().cloned();
            let take_large = match (&small, &large) {
                (None, None) => break,
                (Some(_), None) => false,
                (None, Some(_)) => true,
                (Some(s), Some(l)) => l < s,
            };
            if take_large {
                let (_, j) = self.waiting_large.pop_first().expect("nonempty");
                ctx.start(i, j);
                self.counter = 0;
            } else {
                let (_, _, orig) = self.waiting_small.pop_first().expect("nonempty");
                self.small_runs.insert(orig);
                ctx.start(i, orig);
            }
        }
    }

    fn model(&self) -> Model {
        Model::KillRestart
    }
}

pub fn run_kill_restart_detailed(instance: &Instance, opts: &EngineOptions) -> Result<(RunResult, KillRestart)> {
    let mut pol = KillRestart::new(instance.n(), instance.machines());
    let res = run_on_instance(instance, &mut pol, opts)?;
    Ok((res, pol))
}

pub fn run_kill_restart(instance: &Instance) -> Result<Schedule> {
    Ok(run_kill_restart_detailed(instance, &EngineOptions::default())?.0.schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Outcome;
    use crate::validate::validate_schedule;
    use proptest::prelude::*;

    fn q(n: i64) -> TimeQ {
        TimeQ::from_int(n)
    }

    #[test]
    fn threshold_is_floor_sqrt_nm() {
        assert_eq!(KillRestart::new(50, 2).threshold(), 10);
        assert_eq!(KillRestart::new(3, 1).threshold(), 1);
    }

    /// One machine, `n = 30` (threshold 5, so `4P/ℓ < p` is possible): a
    /// long job, then a stream of tiny jobs released while it runs.
    fn blocking_instance() -> Instance {
        let mut pairs = vec![(q(0), q(100))];
        pairs.extend((1..=29).map(|i| (TimeQ::new(i, 1), TimeQ::new(1, 100))));
        Instance::from_pairs(1, &pairs).unwrap()
    }

    #[test]
    fn kill_discards_work_and_restarts_in_full() {
        let inst = blocking_instance();
        let (res, pol) = run_kill_restart_detailed(&inst, &EngineOptions::default()).unwrap();
        let s = &res.schedule;
        assert!(validate_schedule(&inst, s).unwrap().is_ok());
        assert!(!pol.kills.is_empty());
        let mine: Vec<_> = s.segments_of(0).collect();
        assert_eq!(mine.last().unwrap().outcome, Outcome::Completed);
        assert_eq!(mine.last().unwrap().len(), q(100));
        assert!(mine[..mine.len() - 1].iter().all(|x| x.outcome == Outcome::Killed));
        for k in &pol.kills {
            assert_eq!(k.counter, pol.threshold());
        }
    }

    #[test]
    fn unblocked_small_jobs_leave_counter_alone() {
        // Only tiny jobs: no active large job is ever processing while
        // another tiny job arrives after the first finishes.
        let pairs: Vec<_> = (0..5).map(|i| (q(i), TimeQ::new(1, 2))).collect();
        let inst = Instance::from_pairs(1, &pairs).unwrap();
        let (_, pol) = run_kill_restart_detailed(&inst, &EngineOptions::default()).unwrap();
        assert!(pol.kills.is_empty());
        assert_eq!(pol.counter, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn safety_properties(
            m in 1usize..5,
            pairs in proptest::collection::vec((0i64..40, 1i64..60), 1..45),
        ) {
            let pairs: Vec<_> = pairs.into_iter().map(|(r, p)| (TimeQ::new(r, 2), TimeQ::new(p, 5))).collect();
            let inst = Instance::from_pairs(m, &pairs).unwrap();
            let (res, pol) = run_kill_restart_detailed(&inst, &EngineOptions::default()).unwrap();
            let rep = validate_schedule(&inst, &res.schedule).unwrap();
            prop_assert!(rep.is_ok(), "{}", rep);
            for seg in &res.schedule.segments {
                if pol.roles()[seg.machine] == Role::SmallOnly {
                    prop_assert!(pol.ran_as_small(seg.job));
                }
                if seg.outcome == Outcome::Killed {
                    prop_assert!(!pol.ran_as_small(seg.job));
                    prop_assert!(pol.partition().state(seg.job).is_some());
                }
            }
            for k in &pol.kills {
                prop_assert_eq!(k.counter, pol.threshold());
            }
        }
    }
}
