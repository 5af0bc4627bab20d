//! Parallel sweeps over `(n, rep)` with deterministic, sorted output.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::adversaries::generate;
use crate::algorithms::rng::derive_seed;
use crate::error::{Error, Result};
use crate::flow::{flow_sum, BaselineKind};
use crate::time::TimeQ;
use crate::validate::validate_schedule;

use super::random::{gen_random, RANDOM};
use super::ratio::{compute_ratio, BaselinePolicy};
use super::registry::{run_algorithm, Algorithm};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub alg: Algorithm,
    pub family: String,
    pub ns: Vec<usize>,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
    pub baseline: BaselinePolicy,
    /// Worker count; `None` reads `FLOWLAB_THREADS`, then rayon's default.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub alg: String,
    pub n: usize,
    pub m: usize,
    pub rep: usize,
    /// Per-run seed, `hash(seed, rep)`.
    pub seed: u64,
    pub alg_flow: TimeQ,
    pub baseline: BaselineKind,
    pub baseline_flow: TimeQ,
    pub ratio: TimeQ,
    pub ratio_kind: &'static str,
}

const GEN_STREAM: u64 = 1;
const ALG_STREAM: u64 = 2;

fn run_one(cfg: &BenchConfig, n: usize, rep: usize) -> Result<BenchRow> {
    let seed = derive_seed(cfg.seed, &[rep as u64]);
    let gen_seed = derive_seed(seed, &[GEN_STREAM]);
    let alg_seed = derive_seed(seed, &[ALG_STREAM]);
    let (instance, witness_flow) = if cfg.family == RANDOM {
        (gen_random(n, cfg.m, gen_seed)?, None)
    } else {
        let f = generate(&cfg.family, n, cfg.m, gen_seed)?;
        (f.instance, Some(f.witness_flow))
    };
    let schedule = run_algorithm(cfg.alg, &instance, alg_seed)?;
    let report = validate_schedule(&instance, &schedule)?;
    if !report.is_ok() {
        return Err(Error::Protocol(format!("{} produced an invalid schedule (n={n}, rep={rep}): {report}", cfg.alg)));
    }
    let alg_flow = flow_sum(&instance, &schedule)?;
    let ratio = compute_ratio(&alg_flow, &instance, cfg.baseline, witness_flow.as_ref())?;
    Ok(BenchRow {
        family: cfg.family.clone(),
        alg: cfg.alg.name().to_string(),
        n,
        m: cfg.m,
        rep,
        seed,
        alg_flow,
        ratio_kind: ratio.kind(cfg.m),
        baseline: ratio.baseline,
        baseline_flow: ratio.baseline_flow,
        ratio: ratio.ratio,
    })
}

fn thread_count(cfg: &BenchConfig) -> Result<usize> {
    if let Some(t) = cfg.threads {
        return Ok(t);
    }
    match std::env::var("FLOWLAB_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config(format!("FLOWLAB_THREADS must be a number, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

/// Runs every `(n, rep)` pair; rows come back sorted by `(n, rep)` in the
/// order the sizes were given.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.m == 0 || cfg.reps == 0 || cfg.ns.is_empty() {
        return Err(Error::Config("bench needs m ≥ 1, reps ≥ 1 and at least one n".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg)?)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let tasks: Vec<(usize, usize, usize)> = cfg
        .ns
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| (0..cfg.reps).map(move |r| (i, n, r)))
        .collect();
    let mut rows: Vec<(usize, usize, BenchRow)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, n, r)| run_one(cfg, n, r).map(|row| (i, r, row)))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by_key(|(i, r, _)| (*i, *r));
    Ok(rows.into_iter().map(|(_, _, row)| row).collect())
}

/// Writes rows as CSV. Values are 20-significant-digit decimals unless
/// `exact`, which writes reduced fractions.
pub fn write_bench_csv<W: Write>(w: W, rows: &[BenchRow], exact: bool) -> Result<()> {
    let fmt = |t: &TimeQ| if exact { t.to_string() } else { t.to_decimal(20) };
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "family",
        "alg",
        "n",
        "m",
        "seed",
        "alg_flow",
        "baseline",
        "baseline_flow",
        "ratio",
        "ratio_kind",
    ])?;
    for r in rows {
        out.write_record([
            r.family.clone(),
            r.alg.clone(),
            r.n.to_string(),
            r.m.to_string(),
            r.seed.to_string(),
            fmt(&r.alg_flow),
            r.baseline.to_string(),
            fmt(&r.baseline_flow),
            fmt(&r.ratio),
            r.ratio_kind.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
