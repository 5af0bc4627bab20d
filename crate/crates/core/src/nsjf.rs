//! Non-preemptive shortest-job-first on `m` machines with initial blocking,
//! plus the progress measures used to compare it against other schedules.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::{Job, Model, Outcome, Schedule, Segment};
use crate::time::TimeQ;

/// Runs NSJF over `jobs`. Machine `i` is unavailable during `[0, blocking[i])`.
/// Segments carry the ids of the given jobs (proxies keep their own ids).
pub fn run_nsjf(jobs: &[Job], m: usize, blocking: &[TimeQ]) -> Schedule {
    assert_eq!(blocking.len(), m, "blocking vector length must equal machine count");
    let mut order: Vec<&Job> = jobs.iter().collect();
    order.sort_by(|a, b| a.release.cmp(&b.release).then(a.id.cmp(&b.id)));

    let mut free_at: Vec<TimeQ> = blocking.to_vec();
    let mut waiting: BinaryHeap<Reverse<(TimeQ, usize, usize)>> = BinaryHeap::new();
    let mut next = 0;
    let mut t = TimeQ::zero();
    let mut segments = Vec::with_capacity(jobs.len());

    loop {
        while next < order.len() && order[next].release <= t {
            let j = order[next];
            waiting.push(Reverse((j.size.clone(), j.id, next)));
            next += 1;
        }
        if waiting.is_empty() {
            if next == order.len() {
                break;
            }
            t = order[next].release.clone();
            continue;
        }
        match (0..m).find(|&i| free_at[i] <= t) {
            Some(i) => {
                let Reverse((size, id, _)) = waiting.pop().expect("nonempty");
                let end = &t + &size;
                segments.push(Segment::completed(id, i, t.clone(), end.clone()));
                free_at[i] = end;
            }
            None => {
                let mut nt = free_at.iter().min().expect("m ≥ 1").clone();
                if next < order.len() && order[next].release < nt {
                    nt = order[next].release.clone();
                }
                t = nt;
            }
        }
    }
    Schedule::with_segments(Model::NonPreemptive, segments)
}

fn first_starts(schedule: &Schedule) -> std::collections::HashMap<usize, TimeQ> {
    let mut out: std::collections::HashMap<usize, TimeQ> = std::collections::HashMap::new();
    for s in &schedule.segments {
        out.entry(s.job)
            .and_modify(|v| {
                if s.start < *v {
                    *v = s.start.clone();
                }
            })
            .or_insert_with(|| s.start.clone());
    }
    out
}

/// Total size of jobs with size ≤ `p` (all jobs when `p` is `None`) that have
/// started by `t`.
pub fn progress_volume_started(schedule: &Schedule, jobs: &[Job], p: Option<&TimeQ>, t: &TimeQ) -> TimeQ {
    let starts = first_starts(schedule);
    jobs.iter()
        .filter(|j| p.is_none_or(|p| j.size <= *p) && j.release <= *t)
        .filter(|j| starts.get(&j.id).is_some_and(|s| s <= t))
        .map(|j| &j.size)
        .sum()
}

/// Work executed by `t` on jobs with size ≤ `p`, counting Completed segments
/// only (work on killed runs is lost).
pub fn progress_volume_processed(schedule: &Schedule, jobs: &[Job], p: Option<&TimeQ>, t: &TimeQ) -> TimeQ {
    let mut eligible = std::collections::HashSet::new();
    for j in jobs {
        if p.is_none_or(|p| j.size <= *p) && j.release <= *t {
            eligible.insert(j.id);
        }
    }
    let mut total = TimeQ::zero();
    for s in &schedule.segments {
        if s.outcome == Outcome::Completed && eligible.contains(&s.job) && s.start < *t {
            let end = if s.end < *t { &s.end } else { t };
            total += end - &s.start;
        }
    }
    total
}

/// Number of jobs with size ≤ `p` completed by `t`.
pub fn completed_count(schedule: &Schedule, jobs: &[Job], p: Option<&TimeQ>, t: &TimeQ) -> usize {
    let max_id = jobs.iter().map(|j| j.id + 1).max().unwrap_or(0);
    let completions = schedule.completions(max_id);
    jobs.iter()
        .filter(|j| p.is_none_or(|p| j.size <= *p))
        .filter(|j| completions[j.id].as_ref().is_some_and(|c| c <= t))
        .count()
}

/// Machine time available in `[0, t]`: `Σ max(0, t − b_i)`.
pub fn active_power(blocking: &[TimeQ], t: &TimeQ) -> TimeQ {
    blocking.iter().filter(|b| *b < t).map(|b| t - b).sum()
}

/// Least `t ≥ 0` with `active_power(t) ≥ w`.
pub fn active_power_inverse(blocking: &[TimeQ], w: &TimeQ) -> TimeQ {
    assert!(!blocking.is_empty(), "need at least one machine");
    if !w.is_positive() {
        return TimeQ::zero();
    }
    let mut b = blocking.to_vec();
    b.sort();
    // A is linear with slope k on [b[k-1], b[k]].
    let mut acc = TimeQ::zero();
    for k in 1..=b.len() {
        let lo = &b[k - 1];
        let slope = TimeQ::from(k);
        if k < b.len() {
            let hi = &b[k];
            let gain = &(hi - lo) * &slope;
            if &acc + &gain >= *w {
                return lo + &((w - &acc) / &slope);
            }
            acc += gain;
        } else {
            return lo + &((w - &acc) / &slope);
        }
    }
    unreachable!()
}
