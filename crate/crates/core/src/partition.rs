//! Online rank-based partitioning of jobs into small and large, with proxy
//! jobs standing in for displaced large jobs that never started.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{Job, JobId, Provenance};
use crate::time::TimeQ;

/// Total order used to rank jobs: larger size ranks higher; among equal
/// sizes the job that arrived earlier ranks higher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankKey {
    pub size: TimeQ,
    pub arrival: u64,
}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.size.cmp(&other.size).then(other.arrival.cmp(&self.arrival))
    }
}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Small,
    ActiveLarge,
    Proxied { by: JobId },
    Committed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Large,
    Small,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Displacement {
    /// The evicted job was still waiting; this job replaces it.
    Proxy(Job),
    /// The evicted job had already started and keeps running as-is.
    Committed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifyOutcome {
    pub class: Class,
    pub displaced: Option<(JobId, Displacement)>,
}

impl ClassifyOutcome {
    fn small() -> Self {
        ClassifyOutcome { class: Class::Small, displaced: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionState {
    capacity: usize,
    active_large: BTreeSet<(RankKey, JobId)>,
    job_state: BTreeMap<JobId, JobState>,
    released_work: TimeQ,
    next_proxy_id: JobId,
    arrivals: u64,
    #[serde(skip)]
    proxies: Vec<Job>,
}

impl PartitionState {
    /// `capacity` is the maximum number of simultaneously active large jobs;
    /// proxy ids start at `first_proxy_id` (normally the instance size).
    pub fn new(capacity: usize, first_proxy_id: JobId) -> Self {
        assert!(capacity >= 1, "capacity must be positive");
        PartitionState {
            capacity,
            active_large: BTreeSet::new(),
            job_state: BTreeMap::new(),
            released_work: TimeQ::zero(),
            next_proxy_id: first_proxy_id,
            arrivals: 0,
            proxies: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn active_len(&self) -> usize {
        self.active_large.len()
    }

    pub fn active_large(&self) -> impl Iterator<Item = JobId> + '_ {
        self.active_large.iter().map(|(_, id)| *id)
    }

    pub fn is_active_large(&self, id: JobId) -> bool {
        self.job_state.get(&id) == Some(&JobState::ActiveLarge)
    }

    pub fn state(&self, id: JobId) -> Option<JobState> {
        self.job_state.get(&id).copied()
    }

    /// Sum of sizes of all classified original jobs.
    pub fn released_work(&self) -> &TimeQ {
        &self.released_work
    }

    pub fn proxies(&self) -> &[Job] {
        &self.proxies
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("partition state serializes")
    }

    fn admit(&mut self, job: &Job) -> RankKey {
        assert!(
            !self.job_state.contains_key(&job.id),
            "job {} classified twice",
            job.id
        );
        assert_eq!(job.provenance, Provenance::Original, "proxies are never classified");
        self.released_work += &job.size;
        let key = RankKey { size: job.size.clone(), arrival: self.arrivals };
        self.arrivals += 1;
        key
    }

    fn rank_step(
        &mut self,
        job: &Job,
        key: RankKey,
        mut is_waiting: impl FnMut(JobId) -> bool,
    ) -> ClassifyOutcome {
        if self.active_large.len() < self.capacity {
            self.active_large.insert((key, job.id));
            self.job_state.insert(job.id, JobState::ActiveLarge);
            return ClassifyOutcome { class: Class::Large, displaced: None };
        }
        let min = self.active_large.iter().next().expect("capacity ≥ 1").clone();
        if key <= min.0 {
            self.job_state.insert(job.id, JobState::Small);
            return ClassifyOutcome::small();
        }
        self.active_large.remove(&min);
        let (min_key, evicted) = min;
        let displacement = if is_waiting(evicted) {
            let proxy = Job {
                id: self.next_proxy_id,
                release: job.release.clone(),
                size: min_key.size,
                provenance: Provenance::ProxyOf(evicted),
            };
            self.next_proxy_id += 1;
            self.job_state.insert(evicted, JobState::Proxied { by: proxy.id });
            self.proxies.push(proxy.clone());
            Displacement::Proxy(proxy)
        } else {
            self.job_state.insert(evicted, JobState::Committed);
            Displacement::Committed
        };
        self.active_large.insert((key, job.id));
        self.job_state.insert(job.id, JobState::ActiveLarge);
        ClassifyOutcome { class: Class::Large, displaced: Some((evicted, displacement)) }
    }

    /// Rank-only classification.
    pub fn classify(&mut self, job: &Job, is_waiting: impl FnMut(JobId) -> bool) -> ClassifyOutcome {
        let key = self.admit(job);
        self.rank_step(job, key, is_waiting)
    }

    /// Classification that first declares the job small when its size is at
    /// most `4P/capacity`, `P` including the job itself.
    pub fn classify_refined(&mut self, job: &Job, is_waiting: impl FnMut(JobId) -> bool) -> ClassifyOutcome {
        let key = self.admit(job);
        if job.size <= absolute_small_bound(&self.released_work, self.capacity) {
            self.job_state.insert(job.id, JobState::Small);
            return ClassifyOutcome::small();
        }
        self.rank_step(job, key, is_waiting)
    }
}

/// `4P/ℓ`.
pub fn absolute_small_bound(released_work: &TimeQ, capacity: usize) -> TimeQ {
    released_work * &TimeQ::from_int(4) / &TimeQ::from(capacity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn job(id: JobId, r: i64, p: i64) -> Job {
        Job::new(id, TimeQ::from_int(r), TimeQ::from_int(p))
    }

    #[test]
    fn fill_evict_and_small() {
        let mut st = PartitionState::new(2, 100);
        assert_eq!(st.classify(&job(0, 0, 5), |_| true).class, Class::Large);
        assert_eq!(st.classify(&job(1, 1, 3), |_| true).class, Class::Large);
        assert_eq!(st.active_len(), 2);

        let out = st.classify(&job(2, 4, 7), |id| id == 1);
        assert_eq!(out.class, Class::Large);
        let (evicted, disp) = out.displaced.unwrap();
        assert_eq!(evicted, 1);
        let Displacement::Proxy(proxy) = disp else { panic!("expected proxy") };
        assert_eq!(proxy.id, 100);
        assert_eq!(proxy.release, TimeQ::from_int(4));
        assert_eq!(proxy.size, TimeQ::from_int(3));
        assert_eq!(proxy.provenance, Provenance::ProxyOf(1));
        assert_eq!(st.state(1), Some(JobState::Proxied { by: 100 }));

        assert_eq!(st.classify(&job(3, 5, 1), |_| true).class, Class::Small);
        let mut active: Vec<_> = st.active_large().collect();
        active.sort();
        assert_eq!(active, vec![0, 2]);
    }

    #[test]
    fn started_job_is_committed() {
        let mut st = PartitionState::new(1, 10);
        st.classify(&job(0, 0, 2), |_| true);
        let out = st.classify(&job(1, 1, 3), |_| false);
        assert_eq!(out.displaced, Some((0, Displacement::Committed)));
        assert_eq!(st.state(0), Some(JobState::Committed));
        assert!(st.proxies().is_empty());
    }

    #[test]
    fn tie_with_minimum_is_small() {
        let mut st = PartitionState::new(1, 10);
        st.classify(&job(0, 0, 4), |_| true);
        assert_eq!(st.classify(&job(1, 0, 4), |_| true).class, Class::Small);
    }

    #[test]
    fn refined_rule_examples() {
        // Prior P = 10 then a size-3 arrival: 4·13/4 = 13 ≥ 3.
        let mut st = PartitionState::new(4, 10);
        st.classify_refined(&job(0, 0, 10), |_| true);
        assert_eq!(st.released_work(), &TimeQ::from_int(10));
        assert_eq!(st.classify_refined(&job(1, 1, 3), |_| true).class, Class::Small);

        // First job of size 8 with ℓ = 4: bound 4·8/4 = 8, boundary inclusive.
        let mut st = PartitionState::new(4, 10);
        assert_eq!(st.classify_refined(&job(0, 0, 8), |_| true).class, Class::Small);

        // Prior P = 1: ℓ = 2 gives bound 202, ℓ = 50 gives 404/50.
        let mut st = PartitionState::new(2, 10);
        st.classify_refined(&job(0, 0, 1), |_| true);
        assert_eq!(st.classify_refined(&job(1, 1, 100), |_| true).class, Class::Small);
        let mut st = PartitionState::new(50, 10);
        st.classify_refined(&job(0, 0, 1), |_| true);
        assert_eq!(absolute_small_bound(&TimeQ::from_int(101), 50), TimeQ::new(202, 25));
        assert_eq!(st.classify_refined(&job(1, 1, 100), |_| true).class, Class::Large);
    }

    #[test]
    fn dump_is_json() {
        let mut st = PartitionState::new(2, 5);
        st.classify(&job(0, 0, 1), |_| true);
        let v = st.to_json();
        assert_eq!(v["capacity"], 2);
        assert_eq!(v["job_state"]["0"], "active_large");
    }

    #[test]
    #[should_panic(expected = "classified twice")]
    fn reclassification_panics() {
        let mut st = PartitionState::new(2, 5);
        st.classify(&job(0, 0, 1), |_| true);
        st.classify(&job(0, 0, 1), |_| true);
    }

    proptest! {
        #[test]
        fn active_set_bounded_and_smalls_witnessed(
            cap in 1usize..6,
            sizes in proptest::collection::vec(1i64..8, 1..40),
            waiting_bits in proptest::collection::vec(any::<bool>(), 40),
        ) {
            let n = sizes.len();
            let mut st = PartitionState::new(cap, n);
            let mut seen: Vec<RankKey> = Vec::new();
            for (i, &p) in sizes.iter().enumerate() {
                let key = RankKey { size: TimeQ::from_int(p), arrival: i as u64 };
                let out = st.classify(&job(i, i as i64, p), |id| waiting_bits[id % 40]);
                prop_assert!(st.active_len() <= cap);
                if out.class == Class::Small {
                    let higher = seen.iter().filter(|k| **k > key).count();
                    prop_assert!(higher >= cap);
                }
                if let Some((evicted, Displacement::Proxy(p))) = &out.displaced {
                    prop_assert!(p.size < TimeQ::from_int(sizes[i]));
                    prop_assert_eq!(p.size.clone(), TimeQ::from_int(sizes[*evicted]));
                    prop_assert_eq!(p.release.clone(), TimeQ::from_int(i as i64));
                }
                seen.push(key);
            }
        }
    }
}
