//! Instance (JSON) and schedule/transcript (JSON lines) files.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, InstanceMeta, Job, Model, Schedule, Segment};
use crate::time::TimeQ;

#[derive(Debug, Serialize, Deserialize)]
struct JobRecord {
    id: usize,
    r: TimeQ,
    p: TimeQ,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceRecord {
    m: usize,
    #[serde(default)]
    allow_zero_size: bool,
    jobs: Vec<JobRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<InstanceMeta>,
}

pub fn instance_to_json(instance: &Instance) -> Result<String> {
    let mut jobs: Vec<JobRecord> = instance
        .jobs()
        .iter()
        .map(|j| JobRecord { id: j.id, r: j.release.clone(), p: j.size.clone() })
        .collect();
    jobs.sort_by_key(|j| j.id);
    let rec = InstanceRecord {
        m: instance.machines(),
        allow_zero_size: instance.allow_zero_size(),
        jobs,
        meta: instance.meta.clone(),
    };
    Ok(serde_json::to_string_pretty(&rec)?)
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let rec: InstanceRecord = serde_json::from_str(text)?;
    let jobs = rec.jobs.into_iter().map(|j| Job::new(j.id, j.r, j.p)).collect();
    let mut inst = Instance::new(rec.m, jobs, rec.allow_zero_size)?;
    inst.meta = rec.meta;
    Ok(inst)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<()> {
    let mut text = instance_to_json(instance)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// One segment per line. The model is not part of the line format; callers
/// supply it when reading.
pub fn write_schedule<W: Write>(mut w: W, schedule: &Schedule) -> Result<()> {
    for seg in &schedule.segments {
        serde_json::to_writer(&mut w, seg)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn schedule_to_jsonl(schedule: &Schedule) -> Result<String> {
    let mut buf = Vec::new();
    write_schedule(&mut buf, schedule)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn read_schedule<R: BufRead>(r: R, model: Model) -> Result<Schedule> {
    let mut segments = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let seg: Segment = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("schedule line {}: {e}", lineno + 1)))?;
        segments.push(seg);
    }
    Ok(Schedule::with_segments(model, segments))
}

pub fn read_schedule_file(path: &Path, model: Model) -> Result<Schedule> {
    let f = std::fs::File::open(path)?;
    read_schedule(std::io::BufReader::new(f), model)
}

pub fn write_schedule_file(path: &Path, schedule: &Schedule) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_schedule(&mut w, schedule)?;
    w.flush()?;
    Ok(())
}

/// Writes any serializable records as JSON lines.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<()> {
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
