use std::fmt;
use std::str::FromStr;

use crate::algorithms::det_np::{run_det_nonpreemptive, run_det_nonpreemptive_detailed, DetNpConfig};
use crate::algorithms::kill_restart::run_kill_restart_detailed;
use crate::algorithms::unknown_n::run_kill_restart_unknown_n_detailed;
use crate::algorithms::{run_greedy, run_kill_restart, run_kill_restart_unknown_n, run_rand_multi, run_rand_single, Greedy};
use crate::baselines::run_srpt;
use crate::engine::{run_on_instance, EngineOptions, Event};
use crate::error::{Error, Result};
use crate::model::{Instance, Model, Outcome, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Greedy,
    RandSingle,
    RandMulti,
    DetNp,
    KillRestart,
    KillRestartUnknownN,
    Srpt,
    SrptMigratory,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Greedy,
        Algorithm::RandSingle,
        Algorithm::RandMulti,
        Algorithm::DetNp,
        Algorithm::KillRestart,
        Algorithm::KillRestartUnknownN,
        Algorithm::Srpt,
        Algorithm::SrptMigratory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::RandSingle => "rand-single",
            Algorithm::RandMulti => "rand-multi",
            Algorithm::DetNp => "det-np",
            Algorithm::KillRestart => "kill-restart",
            Algorithm::KillRestartUnknownN => "kill-restart-unknown-n",
            Algorithm::Srpt => "srpt",
            Algorithm::SrptMigratory => "srpt-mig",
        }
    }

    /// The schedule model the algorithm's output must satisfy.
    pub fn model(self) -> Model {
        match self {
            Algorithm::Greedy | Algorithm::RandSingle | Algorithm::RandMulti | Algorithm::DetNp => Model::NonPreemptive,
            Algorithm::KillRestart | Algorithm::KillRestartUnknownN => Model::KillRestart,
            Algorithm::Srpt => Model::Preemptive,
            Algorithm::SrptMigratory => Model::PreemptiveMigratory,
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Algorithm::RandSingle | Algorithm::RandMulti)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            Error::Config(format!("unknown algorithm {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Runs `alg` on `instance`; `seed` only matters for randomized algorithms.
pub fn run_algorithm(alg: Algorithm, instance: &Instance, seed: u64) -> Result<Schedule> {
    match alg {
        Algorithm::Greedy => run_greedy(instance),
        Algorithm::RandSingle => run_rand_single(instance, seed),
        Algorithm::RandMulti => run_rand_multi(instance, seed),
        Algorithm::DetNp => run_det_nonpreemptive(instance, DetNpConfig::new(instance.n(), instance.machines())),
        Algorithm::KillRestart => run_kill_restart(instance),
        Algorithm::KillRestartUnknownN => run_kill_restart_unknown_n(instance),
        Algorithm::Srpt => Ok(run_srpt(instance, false)),
        Algorithm::SrptMigratory => Ok(run_srpt(instance, true)),
    }
}

/// Release, start, kill and completion events read off a finished
/// schedule, in time order (kills and completions before releases before
/// starts at equal times).
pub fn transcript_from_schedule(instance: &Instance, schedule: &Schedule) -> Vec<Event> {
    let mut keyed: Vec<((crate::time::TimeQ, u8, usize), Event)> = Vec::new();
    for j in instance.jobs() {
        keyed.push(((j.release.clone(), 1, j.id), Event::Release { t: j.release.clone(), job: j.id, p: j.size.clone() }));
    }
    // Preempted pieces end silently; only a job's last piece completes it.
    let mut last = std::collections::HashMap::new();
    for (k, s) in schedule.segments.iter().enumerate() {
        if s.outcome == Outcome::Completed {
            let e = last.entry(s.job).or_insert(k);
            if schedule.segments[*e].end <= s.end {
                *e = k;
            }
        }
    }
    for (k, s) in schedule.segments.iter().enumerate() {
        keyed.push(((s.start.clone(), 2, s.job), Event::Start { t: s.start.clone(), job: s.job, machine: s.machine }));
        let end = match s.outcome {
            Outcome::Completed if last.get(&s.job) == Some(&k) => {
                Event::Complete { t: s.end.clone(), job: s.job, machine: s.machine }
            }
            Outcome::Completed => continue,
            Outcome::Killed => Event::Kill { t: s.end.clone(), job: s.job, machine: s.machine },
        };
        keyed.push(((s.end.clone(), 0, s.job), end));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, e)| e).collect()
}

/// Like [`run_algorithm`], also returning a transcript: the engine's own
/// for event-driven policies (with classification and estimate updates),
/// otherwise one read off the schedule.
pub fn run_algorithm_traced(alg: Algorithm, instance: &Instance, seed: u64) -> Result<(Schedule, Vec<Event>)> {
    let opts = EngineOptions { record_transcript: true, horizon: None };
    let res = match alg {
        Algorithm::Greedy => run_on_instance(instance, &mut Greedy::new(), &opts)?,
        Algorithm::DetNp => {
            run_det_nonpreemptive_detailed(instance, DetNpConfig::new(instance.n(), instance.machines()), &opts)?.0
        }
        Algorithm::KillRestart => run_kill_restart_detailed(instance, &opts)?.0,
        Algorithm::KillRestartUnknownN => run_kill_restart_unknown_n_detailed(instance, &opts)?.0,
        _ => {
            let s = run_algorithm(alg, instance, seed)?;
            let t = transcript_from_schedule(instance, &s);
            return Ok((s, t));
        }
    };
    Ok((res.schedule, res.transcript))
}
