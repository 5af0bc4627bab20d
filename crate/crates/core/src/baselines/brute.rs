//! Exact non-preemptive optimum by exhaustive search, for tiny instances.

use crate::error::{Error, Result};
use crate::model::{Instance, Model, Schedule, Segment};
use crate::time::TimeQ;

pub const BRUTE_MAX_JOBS: usize = 9;
pub const BRUTE_MAX_MACHINES: usize = 3;

struct Search<'a> {
    inst: &'a Instance,
    free: Vec<Option<TimeQ>>,
    done: Vec<bool>,
    trail: Vec<(usize, usize, TimeQ)>,
    best: Option<TimeQ>,
    best_trail: Vec<(usize, usize, TimeQ)>,
}

impl Search<'_> {
    /// Jobs are placed in nondecreasing `(start, machine, id)` order, each
    /// left-shifted; unused machines are opened in index order.
    fn go(&mut self, flow: TimeQ, last: Option<(TimeQ, usize, usize)>) {
        let jobs = self.inst.jobs();
        if self.done.iter().all(|&d| d) {
            if self.best.as_ref().is_none_or(|b| flow < *b) {
                self.best = Some(flow);
                self.best_trail = self.trail.clone();
            }
            return;
        }
        let floor = last.as_ref().map(|l| l.0.clone()).unwrap_or_else(TimeQ::zero);
        let mut bound = flow.clone();
        for (_, j) in jobs.iter().enumerate().filter(|(pos, _)| !self.done[*pos]) {
            bound += &j.release.clone().max(floor.clone()) + &j.size - &j.release;
        }
        if self.best.as_ref().is_some_and(|b| bound >= *b) {
            return;
        }
        let first_unused = self.free.iter().position(|f| f.is_none());
        for i in 0..self.free.len() {
            if self.free[i].is_none() && Some(i) != first_unused {
                continue;
            }
            for (j, job) in jobs.iter().enumerate() {
                if self.done[j] {
                    continue;
                }
                let start = match &self.free[i] {
                    Some(f) => job.release.clone().max(f.clone()),
                    None => job.release.clone(),
                };
                let key = (start.clone(), i, job.id);
                if last.as_ref().is_some_and(|l| key <= *l) {
                    continue;
                }
                let end = &start + &job.size;
                let saved = self.free[i].replace(end.clone());
                self.done[j] = true;
                self.trail.push((job.id, i, start.clone()));
                self.go(&flow + &end - &job.release, Some(key));
                self.trail.pop();
                self.done[j] = false;
                self.free[i] = saved;
            }
        }
    }
}

/// Optimal non-preemptive schedule and its total flow. Refuses instances
/// beyond [`BRUTE_MAX_JOBS`] jobs or [`BRUTE_MAX_MACHINES`] machines.
pub fn brute_force_opt_np(instance: &Instance) -> Result<(Schedule, TimeQ)> {
    let (n, m) = (instance.n(), instance.machines());
    if n > BRUTE_MAX_JOBS || m > BRUTE_MAX_MACHINES {
        return Err(Error::TooLarge(format!(
            "exhaustive search supports n ≤ {BRUTE_MAX_JOBS}, m ≤ {BRUTE_MAX_MACHINES}; got n = {n}, m = {m}"
        )));
    }
    let mut s = Search {
        inst: instance,
        free: vec![None; m],
        done: vec![false; n],
        trail: Vec::new(),
        best: None,
        best_trail: Vec::new(),
    };
    s.go(TimeQ::zero(), None);
    let best = s.best.unwrap_or_else(TimeQ::zero);
    let segments = s
        .best_trail
        .iter()
        .map(|(j, i, st)| Segment::completed(*j, *i, st.clone(), st + &instance.job(*j).size))
        .collect();
    Ok((Schedule::with_segments(Model::NonPreemptive, segments), best))
}
