//! Shortest remaining processing time, with or without migration.

use crate::model::{Instance, JobId, Model, Schedule, Segment};
use crate::time::TimeQ;

/// At every release or completion the jobs with least remaining work run
/// (ties by id). Without migration a job is bound to the machine where it
/// first runs and only competes for that machine afterwards.
pub fn run_srpt(instance: &Instance, migratory: bool) -> Schedule {
    let m = instance.machines();
    let n = instance.n();
    let model = if migratory { Model::PreemptiveMigratory } else { Model::Preemptive };
    let jobs = instance.jobs();
    let mut remaining: Vec<Option<TimeQ>> = vec![None; n];
    let mut bound: Vec<Option<usize>> = vec![None; n];
    let mut current: Vec<Option<(JobId, TimeQ)>> = vec![None; m];
    let mut segments = Vec::new();
    let mut next = 0;
    let mut done = 0;
    let mut t = TimeQ::zero();

    let close = |current: &mut Vec<Option<(JobId, TimeQ)>>, segments: &mut Vec<Segment>, i: usize, t: &TimeQ| {
        if let Some((j, s)) = current[i].take() {
            if s < *t {
                segments.push(Segment::completed(j, i, s, t.clone()));
            }
        }
    };

    while done < n {
        while next < n && jobs[next].release <= t {
            remaining[jobs[next].id] = Some(jobs[next].size.clone());
            next += 1;
        }
        // Finish jobs with no work left.
        let mut zero_done: Vec<JobId> = (0..n).filter(|&j| remaining[j].as_ref().is_some_and(|r| r.is_zero())).collect();
        zero_done.sort();
        for j in zero_done {
            remaining[j] = None;
            done += 1;
            let running_here = current.iter().position(|c| c.as_ref().is_some_and(|(cj, _)| *cj == j));
            let i = running_here.or(bound[j]).unwrap_or(0);
            let is_zero_size = instance.job(j).size.is_zero();
            if let Some(i) = running_here {
                close(&mut current, &mut segments, i, &t);
            }
            if is_zero_size {
                // Split whatever runs on `i` so the instant does not overlap it.
                if let Some((cj, s)) = current[i].clone() {
                    if s < t {
                        segments.push(Segment::completed(cj, i, s, t.clone()));
                        current[i] = Some((cj, t.clone()));
                    }
                }
                segments.push(Segment::completed(j, i, t.clone(), t.clone()));
            }
        }
        if done == n {
            break;
        }

        let mut active: Vec<(TimeQ, JobId)> =
            (0..n).filter_map(|j| remaining[j].as_ref().map(|r| (r.clone(), j))).collect();
        active.sort();
        let mut assign: Vec<Option<JobId>> = vec![None; m];
        if migratory {
            let chosen: Vec<JobId> = active.iter().take(m).map(|(_, j)| *j).collect();
            let mut placed = vec![false; chosen.len()];
            for i in 0..m {
                if let Some((cj, _)) = &current[i] {
                    if let Some(pos) = chosen.iter().position(|c| c == cj) {
                        assign[i] = Some(*cj);
                        placed[pos] = true;
                    }
                }
            }
            for (pos, &j) in chosen.iter().enumerate() {
                if !placed[pos] {
                    let i = (0..m).find(|&i| assign[i].is_none()).expect("m slots for m jobs");
                    assign[i] = Some(j);
                }
            }
        } else {
            for (_, j) in &active {
                match bound[*j] {
                    Some(i) => {
                        if assign[i].is_none() {
                            assign[i] = Some(*j);
                        }
                    }
                    None => {
                        if let Some(i) = (0..m).find(|&i| assign[i].is_none()) {
                            assign[i] = Some(*j);
                            bound[*j] = Some(i);
                        }
                    }
                }
            }
        }
        for i in 0..m {
            let same = match (&current[i], assign[i]) {
                (Some((cj, _)), Some(aj)) => *cj == aj,
                (None, None) => true,
                _ => false,
            };
            if !same {
                close(&mut current, &mut segments, i, &t);
                if let Some(j) = assign[i] {
                    current[i] = Some((j, t.clone()));
                }
            }
        }

        let mut horizon: Option<TimeQ> = if next < n { Some(jobs[next].release.clone()) } else { None };
        for (j, _) in current.iter().flatten() {
            let fin = &t + remaining[*j].as_ref().expect("running job has work");
            if horizon.as_ref().is_none_or(|h| fin < *h) {
                horizon = Some(fin);
            }
        }
        let nt = horizon.expect("unfinished jobs imply a next event");
        let dt = &nt - &t;
        for (j, _) in current.iter().flatten() {
            let r = remaining[*j].as_mut().expect("running");
            *r -= &dt;
        }
        t = nt;
    }
    for i in 0..m {
        close(&mut current, &mut segments, i, &t);
    }
    Schedule::with_segments(model, segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_sum;
    use crate::validate::validate_schedule;
    use proptest::prelude::*;

    fn q(n: i64) -> TimeQ {
        TimeQ::from_int(n)
    }

    /// Single-machine preemptive optimum for integer data, by trying every
    /// job to run in each unit slot (feasible only for tiny inputs).
    fn unit_slot_opt(pairs: &[(i64, i64)]) -> i64 {
        fn rec(pairs: &[(i64, i64)], rem: &mut Vec<i64>, t: i64, acc: i64, best: &mut i64) {
            if rem.iter().all(|&r| r == 0) {
                *best = (*best).min(acc);
                return;
            }
            if acc >= *best {
                return;
            }
            let mut any = false;
            for j in 0..pairs.len() {
                if rem[j] > 0 && pairs[j].0 <= t {
                    any = true;
                    rem[j] -= 1;
                    let add = if rem[j] == 0 { t + 1 - pairs[j].0 } else { 0 };
                    rec(pairs, rem, t + 1, acc + add, best);
                    rem[j] += 1;
                }
            }
            if !any {
                rec(pairs, rem, t + 1, acc, best);
            }
        }
        let mut rem: Vec<i64> = pairs.iter().map(|p| p.1).collect();
        let mut best = i64::MAX;
        rec(pairs, &mut rem, 0, 0, &mut best);
        best
    }

    #[test]
    fn preempts_for_shorter_arrival() {
        let inst = Instance::from_pairs(1, &[(q(0), q(3)), (q(1), q(1))]).unwrap();
        let s = run_srpt(&inst, false);
        assert!(validate_schedule(&inst, &s).unwrap().is_ok());
        assert_eq!(s.completion(0), Some(q(4)));
        assert_eq!(s.completion(1), Some(q(2)));
        assert_eq!(flow_sum(&inst, &s).unwrap(), q(5));
        assert_eq!(unit_slot_opt(&[(0, 3), (1, 1)]), 5);
    }

    #[test]
    fn single_job_flow_is_size() {
        let inst = Instance::from_pairs(1, &[(q(2), TimeQ::new(7, 3))]).unwrap();
        let s = run_srpt(&inst, true);
        assert_eq!(flow_sum(&inst, &s).unwrap(), TimeQ::new(7, 3));
    }

    #[test]
    fn three_equal_jobs_two_machines() {
        let inst = Instance::from_pairs(2, &[(q(0), q(2)), (q(0), q(2)), (q(0), q(2))]).unwrap();
        let s = run_srpt(&inst, true);
        assert!(validate_schedule(&inst, &s).unwrap().is_ok());
        assert_eq!(flow_sum(&inst, &s).unwrap(), q(8));
        let (_, opt) = crate::baselines::brute_force_opt_np(&inst).unwrap();
        assert_eq!(opt, q(8));
    }

    proptest! {
        #[test]
        fn srpt_matches_unit_slot_optimum(pairs in proptest::collection::vec((0i64..4, 1i64..3), 1..5)) {
            let tq: Vec<_> = pairs.iter().map(|&(r, p)| (q(r), q(p))).collect();
            let inst = Instance::from_pairs(1, &tq).unwrap();
            let s = run_srpt(&inst, false);
            prop_assert_eq!(flow_sum(&inst, &s).unwrap(), q(unit_slot_opt(&pairs)));
        }

        #[test]
        fn outputs_validate(
            m in 1usize..4,
            pairs in proptest::collection::vec((0i64..20, 1i64..15), 1..15),
            migratory in any::<bool>(),
        ) {
            let tq: Vec<_> = pairs.iter().map(|&(r, p)| (TimeQ::new(r, 3), TimeQ::new(p, 4))).collect();
            let inst = Instance::from_pairs(m, &tq).unwrap();
            let s = run_srpt(&inst, migratory);
            let rep = validate_schedule(&inst, &s).unwrap();
            prop_assert!(rep.is_ok(), "{}", rep);
        }
    }
}
