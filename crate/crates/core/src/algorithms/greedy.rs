//! Work-conserving FIFO: whenever a machine is free, start the earliest
//! released waiting job.

use std::collections::BTreeSet;

use crate::engine::{run_on_instance, Ctx, EngineOptions, Policy};
use crate::error::Result;
use crate::model::{Instance, Job, JobId, Model, Schedule};
use crate::time::TimeQ;

#[derive(Debug, Default)]
pub struct Greedy {
    waiting: BTreeSet<(TimeQ, JobId)>,
}

impl Greedy {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for Greedy {
    fn on_release(&mut self, _ctx: &mut Ctx, job: &Job) {
        self.waiting.insert((job.release.clone(), job.id));
    }

    fn dispatch(&mut self, ctx: &mut Ctx) {
        for i in 0..ctx.machines() {
            if !ctx.is_idle(i) {
                continue;
            }
            match self.waiting.pop_first() {
                Some((_, j)) => ctx.start(i, j),
                None => break,
            }
        }
    }

    fn model(&self) -> Model {
        Model::NonPreemptive
    }
}

pub fn run_greedy(instance: &Instance) -> Result<Schedule> {
    Ok(run_on_instance(instance, &mut Greedy::new(), &EngineOptions::default())?.schedule)
}
