//! Deterministic non-preemptive policy with machine roles: one machine for
//! large jobs, about half the machines mixed, the rest for small jobs. Mixed
//! machines take large jobs only while fewer than `γ(k)` of them already do,
//! `k` being the number of waiting active large jobs.

use std::collections::{BTreeSet, HashSet};

use crate::engine::{run_on_instance, Ctx, EngineOptions, Event, JobStatus, Policy, RunResult};
use crate::error::Result;
use crate::model::{Instance, Job, JobId, MachineIndex, Model, Schedule};
use crate::partition::{Class, Displacement, PartitionState};
use crate::time::{isqrt, TimeQ};

use super::{sqrt_nm, Role};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetNpConfig {
    pub n: usize,
    pub m: usize,
    pub capacity: usize,
    pub roles: Vec<Role>,
}

impl DetNpConfig {
    /// Machine 0 large-only, machines `1..=⌈m/2⌉` mixed, the rest small-only.
    /// With a single machine there is nobody else to run small jobs, so that
    /// machine also serves them (small jobs first).
    pub fn new(n: usize, m: usize) -> Self {
        let mixed_hi = m.div_ceil(2);
        let roles = (0..m)
            .map(|i| match i {
                0 => Role::LargeOnly,
                i if i <= mixed_hi => Role::Mixed,
                _ => Role::SmallOnly,
            })
            .collect();
        DetNpConfig { n, m, capacity: sqrt_nm(n, m), roles }
    }

    /// `⌊k / √(n/m)⌋`, computed as `⌊√⌊k²m/n⌋⌋`.
    pub fn gamma(&self, k: usize) -> usize {
        if self.n == 0 {
            return 0;
        }
        let x = (k as u128 * k as u128 * self.m as u128) / self.n as u128;
        isqrt(x) as usize
    }
}

/// Record of a large job started on a mixed machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedLargeStart {
    pub time: TimeQ,
    pub machine: MachineIndex,
    pub job: JobId,
    /// Mixed machines already running large jobs.
    pub theta: usize,
    /// Waiting active large jobs, including this one.
    pub waiting_large: usize,
}

#[derive(Debug)]
pub struct DetNp {
    cfg: DetNpConfig,
    part: PartitionState,
    /// `(size, run-id, original)`: proxies queue under their own id.
    waiting_small: BTreeSet<(TimeQ, JobId, JobId)>,
    waiting_large: BTreeSet<(TimeQ, JobId)>,
    large: HashSet<JobId>,
    /// Original jobs that ran as (or via) a small job.
    small_runs: HashSet<JobId>,
    pub mixed_large_starts: Vec<MixedLargeStart>,
}

impl DetNp {
    pub fn new(cfg: DetNpConfig) -> Self {
        let part = PartitionState::new(cfg.capacity, cfg.n);
        DetNp {
            cfg,
            part,
            waiting_small: BTreeSet::new(),
            waiting_large: BTreeSet::new(),
            large: HashSet::new(),
            small_runs: HashSet::new(),
            mixed_large_starts: Vec::new(),
        }
    }

    pub fn config(&self) -> &DetNpConfig {
        &self.cfg
    }

    pub fn is_large(&self, job: JobId) -> bool {
        self.large.contains(&job)
    }

    /// Whether the job was executed as a small job (itself or via a proxy).
    pub fn ran_as_small(&self, job: JobId) -> bool {
        self.small_runs.contains(&job)
    }

    fn start_small(&mut self, ctx: &mut Ctx, machine: MachineIndex) -> bool {
        match self.waiting_small.pop_first() {
            Some((_, _, orig)) => {
                self.small_runs.insert(orig);
                ctx.start(machine, orig);
                true
            }
            None => false,
        }
    }

    fn theta(&self, ctx: &Ctx) -> usize {
        (0..ctx.machines())
            .filter(|&i| self.cfg.roles[i] == Role::Mixed)
            .filter(|&i| ctx.running(i).is_some_and(|r| self.large.contains(&r.job) && !self.small_runs.contains(&r.job)))
            .count()
    }
}

impl Policy for DetNp {
    fn on_release(&mut self, ctx: &mut Ctx, job: &Job) {
        let out = self.part.classify(job, |id| ctx.status(id) == JobStatus::Waiting);
        let mut ev_displaced = None;
        let mut ev_proxy = None;
        match out.class {
            Class::Small => {
                self.waiting_small.insert((job.size.clone(), job.id, job.id));
            }
            Class::Large => {
                self.large.insert(job.id);
                self.waiting_large.insert((job.size.clone(), job.id));
            }
        }
        if let Some((evicted, disp)) = out.displaced {
            ev_displaced = Some(evicted);
            if let Displacement::Proxy(proxy) = disp {
                let size = ctx.job(evicted).size.clone();
                self.waiting_large.remove(&(size, evicted));
                ev_proxy = Some(proxy.id);
                self.waiting_small.insert((proxy.size.clone(), proxy.id, evicted));
            }
        }
        if ctx.recording() {
            ctx.log(Event::Classify {
                t: ctx.now().clone(),
                job: job.id,
                large: out.class == Class::Large,
                displaced: ev_displaced,
                proxy: ev_proxy,
            });
        }
    }

    fn dispatch(&mut self, ctx: &mut Ctx) {
        let m = ctx.machines();
        let single = m == 1;
        // Large-only machine.
        if ctx.is_idle(0) {
            if let Some((_, j)) = self.waiting_large.pop_first() {
                ctx.start(0, j);
            } else if single {
                self.start_small(ctx, 0);
            }
        }
        for i in 1..m {
            if self.cfg.roles[i] != Role::Mixed || !ctx.is_idle(i) {
                continue;
            }
            if self.start_small(ctx, i) {
                continue;
            }
            let k = self.waiting_large.len();
            let theta = self.theta(ctx);
            if k > 0 && theta < self.cfg.gamma(k) {
                let (_, j) = self.waiting_large.pop_first().expect("k > 0");
                self.mixed_large_starts.push(MixedLargeStart {
                    time: ctx.now().clone(),
                    machine: i,
                    job: j,
                    theta,
                    waiting_large: k,
                });
                ctx.start(i, j);
            }
        }
        for i in 1..m {
            if self.cfg.roles[i] == Role::SmallOnly && ctx.is_idle(i) && !self.start_small(ctx, i) {
                break;
            }
        }
    }

    fn model(&self) -> Model {
        Model::NonPreemptive
    }
}

pub fn run_det_nonpreemptive_detailed(instance: &Instance, cfg: DetNpConfig, opts: &EngineOptions) -> Result<(RunResult, DetNp)> {
    let mut pol = DetNp::new(cfg);
    let res = run_on_instance(instance, &mut pol, opts)?;
    Ok((res, pol))
}

pub fn run_det_nonpreemptive(instance: &Instance, cfg: DetNpConfig) -> Result<Schedule> {
    Ok(run_det_nonpreemptive_detailed(instance, cfg, &EngineOptions::default())?.0.schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nsjf::run_nsjf;
    use crate::validate::validate_schedule;
    use proptest::prelude::*;

    fn q(n: i64) -> TimeQ {
        TimeQ::from_int(n)
    }

    #[test]
    fn gamma_examples() {
        let cfg = DetNpConfig::new(400, 4);
        assert_eq!(cfg.gamma(25), 2);
        // √(n/m) = 10: nothing below 10 waiting large jobs.
        for k in 0..10 {
            assert_eq!(cfg.gamma(k), 0);
        }
        assert_eq!(cfg.gamma(10), 1);
        assert_eq!(cfg.gamma(19), 1);
        assert_eq!(cfg.gamma(20), 2);
        // Monotone and matches the real-valued formula away from boundaries.
        let cfg = DetNpConfig::new(97, 5);
        let mut prev = 0;
        for k in 0..500 {
            let g = cfg.gamma(k);
            assert!(g >= prev);
            prev = g;
            let real = (k as f64 / (97.0f64 / 5.0).sqrt()).floor() as usize;
            assert!(g.abs_diff(real) <= 1);
        }
    }

    #[test]
    fn roles_layout() {
        use Role::*;
        assert_eq!(DetNpConfig::new(10, 5).roles, vec![LargeOnly, Mixed, Mixed, Mixed, SmallOnly]);
        assert_eq!(DetNpConfig::new(10, 4).roles, vec![LargeOnly, Mixed, Mixed, SmallOnly]);
        assert_eq!(DetNpConfig::new(10, 2).roles, vec![LargeOnly, Mixed]);
        assert_eq!(DetNpConfig::new(10, 1).roles, vec![LargeOnly]);
    }

    #[test]
    fn all_small_stream_is_nsjf_off_machine_zero() {
        let m = 5;
        let small_only: Vec<_> = (0..26).map(|i| (TimeQ::new(i, 3), q(1))).collect();
        let inst2 = Instance::from_pairs(m, &small_only).unwrap();
        let mut cfg2 = DetNpConfig::new(26, m);
        cfg2.capacity = 1;
        let s2 = run_det_nonpreemptive(&inst2, cfg2).unwrap();
        // Job 0 is the sole active large job; all the rest are small.
        let rest: Vec<Job> = inst2.jobs().iter().skip(1).cloned().collect();
        let nsjf = run_nsjf(&rest, m - 1, &vec![q(0); m - 1]);
        for seg in &nsjf.segments {
            let ours = s2.segments_of(seg.job).next().unwrap();
            assert_eq!(ours.start, seg.start);
            assert_eq!(ours.machine, seg.machine + 1);
        }
    }

    #[test]
    fn single_machine_runs_everything() {
        let inst = Instance::from_pairs(1, &[(q(0), q(3)), (q(0), q(1)), (q(1), q(1))]).unwrap();
        let s = run_det_nonpreemptive(&inst, DetNpConfig::new(3, 1)).unwrap();
        assert!(validate_schedule(&inst, &s).unwrap().is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn role_safety(
            m in 1usize..6,
            pairs in proptest::collection::vec((0i64..30, 1i64..40), 1..40),
        ) {
            let pairs: Vec<_> = pairs.into_iter().map(|(r, p)| (TimeQ::new(r, 2), TimeQ::new(p, 4))).collect();
            let inst = Instance::from_pairs(m, &pairs).unwrap();
            let cfg = DetNpConfig::new(inst.n(), m);
            let (res, pol) = run_det_nonpreemptive_detailed(&inst, cfg.clone(), &EngineOptions::default()).unwrap();
            let rep = validate_schedule(&inst, &res.schedule).unwrap();
            prop_assert!(rep.is_ok(), "{}", rep);
            for seg in &res.schedule.segments {
                let small_run = pol.ran_as_small(seg.job);
                match cfg.roles[seg.machine] {
                    Role::LargeOnly if m > 1 => prop_assert!(!small_run),
                    Role::SmallOnly => prop_assert!(small_run),
                    _ => {}
                }
            }
            for st in &pol.mixed_large_starts {
                prop_assert!(st.theta < cfg.gamma(st.waiting_large));
            }
        }
    }
}
