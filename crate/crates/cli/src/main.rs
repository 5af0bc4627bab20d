//! `flowlab`: generate instances, run policies, verify schedules, sweep
//! benchmarks, play adversary duels and fit scaling exponents.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 usage or other errors.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use flowlab::adversaries::{self, duel_nm2, duel_restart_lb, duel_unknown_n, phase2_flow, DuelReport, UnknownNClass};
use flowlab::algorithms::det_np::{DetNp, DetNpConfig};
use flowlab::algorithms::{Greedy, KillRestart, UnknownN};
use flowlab::engine::{Event, Policy};
use flowlab::harness::{
    compute_ratio, fit_scaling, run_algorithm, run_algorithm_traced, run_bench, write_bench_csv, Algorithm, BaselinePolicy,
    BenchConfig, RANDOM,
};
use flowlab::io::{read_instance, read_schedule_file, write_instance, write_jsonl, write_schedule_file};
use flowlab::{flow_sum, validate_schedule, Instance, Model, Outcome, Schedule, TimeQ};

#[derive(Parser)]
#[command(name = "flowlab", version, about = "Exact online flow-time scheduling laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance (and its witness schedule, for adversarial families).
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance path; the witness goes next to it as `<stem>.witness.jsonl`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an algorithm on an instance file.
    Run {
        #[arg(long)]
        alg: Algorithm,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Schedule output (JSON lines).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Event transcript output (JSON lines).
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long, default_value = "auto")]
        baseline: BaselinePolicy,
        /// Witness schedule to use as the ratio baseline.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Check a schedule against an instance; exit 1 on any violation.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        /// Model to check against; inferred from the segments when omitted.
        #[arg(long)]
        model: Option<Model>,
    },
    /// Sweep an algorithm over a generated family and emit CSV.
    Bench {
        #[arg(long)]
        alg: Algorithm,
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "auto")]
        baseline: BaselinePolicy,
        /// Output file; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write exact rationals instead of 20-digit decimals.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Play an adaptive adversary against a policy.
    Duel {
        #[arg(long)]
        adversary: Adversary,
        #[arg(long)]
        alg: Algorithm,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Second instance size (unknown-n only).
        #[arg(long)]
        n1: Option<usize>,
        /// Probe runs (unknown-n only).
        #[arg(long, default_value_t = 64)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Fit `y ∝ x^slope` on a CSV, averaging y over rows sharing an x.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "n")]
        x: String,
        #[arg(long, default_value = "ratio")]
        y: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Adversary {
    RestartLb,
    Nm2,
    UnknownN,
}

/// Distinguishes "the schedule is invalid" from every other failure.
struct Invalid(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Invalid(msg))) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<std::result::Result<(), Invalid>> {
    match cmd {
        Cmd::Gen { family, n, m, seed, out } => gen(&family, n, m, seed, &out).map(Ok),
        Cmd::Run { alg, instance, seed, out, transcript, baseline, witness } => {
            run(alg, &instance, seed, out.as_deref(), transcript.as_deref(), baseline, witness.as_deref())
        }
        Cmd::Verify { instance, schedule, model } => verify(&instance, &schedule, model),
        Cmd::Bench { alg, family, n, m, reps, seed, baseline, csv, exact, threads } => {
            let cfg = BenchConfig { alg, family, ns: n, m, reps, seed, baseline, threads };
            bench(&cfg, csv.as_deref(), exact).map(Ok)
        }
        Cmd::Duel { adversary, alg, n, m, n1, trials, seed, transcript } => {
            duel(adversary, alg, n, m, n1, trials, seed, transcript.as_deref()).map(Ok)
        }
        Cmd::Fit { csv, x, y } => fit(&csv, &x, &y).map(Ok),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn witness_path(instance: &Path) -> PathBuf {
    let stem = instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    instance.with_file_name(format!("{stem}.witness.jsonl"))
}

fn gen(family: &str, n: usize, m: usize, seed: u64, out: &Path) -> Result<()> {
    if family == RANDOM {
        let inst = flowlab::harness::gen_random(n, m, seed)?;
        write_instance(out, &inst)?;
        return print_json(&json!({ "family": family, "jobs": inst.n(), "m": m, "instance": out }));
    }
    let fam = adversaries::generate(family, n, m, seed)?;
    write_instance(out, &fam.instance)?;
    let wpath = witness_path(out);
    write_schedule_file(&wpath, &fam.witness)?;
    print_json(&json!({
        "family": family,
        "jobs": fam.instance.n(),
        "m": m,
        "k": fam.k(),
        "witness_flow": fam.witness_flow,
        "instance": out,
        "witness": wpath,
    }))
}

fn write_transcript(path: &Path, events: &[Event]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    write_jsonl(&mut w, events)?;
    w.flush()?;
    Ok(())
}

fn run(
    alg: Algorithm,
    instance_path: &Path,
    seed: u64,
    out: Option<&Path>,
    transcript: Option<&Path>,
    baseline: BaselinePolicy,
    witness: Option<&Path>,
) -> Result<std::result::Result<(), Invalid>> {
    let inst = read_instance(instance_path)?;
    let schedule = match transcript {
        Some(tpath) => {
            let (s, events) = run_algorithm_traced(alg, &inst, seed)?;
            write_transcript(tpath, &events)?;
            s
        }
        None => run_algorithm(alg, &inst, seed)?,
    };
    if let Some(p) = out {
        write_schedule_file(p, &schedule)?;
    }
    let report = validate_schedule(&inst, &schedule)?;
    if !report.is_ok() {
        return Ok(Err(Invalid(format!("{alg} produced an invalid schedule:\n{report}"))));
    }
    let flow = flow_sum(&inst, &schedule)?;
    let witness_flow = match witness {
        Some(p) => {
            let w = read_schedule_file(p, infer_model(&read_schedule_file(p, Model::KillRestart)?))?;
            Some(flow_sum(&inst, &w)?)
        }
        None => None,
    };
    let baseline = match (baseline, &witness_flow) {
        (BaselinePolicy::Auto, Some(_)) if inst.n() > flowlab::baselines::BRUTE_MAX_JOBS || inst.machines() > 1 => {
            BaselinePolicy::Witness
        }
        (b, _) => b,
    };
    let ratio = compute_ratio(&flow, &inst, baseline, witness_flow.as_ref())?;
    print_json(&json!({
        "alg": alg.to_string(),
        "model": schedule.model.to_string(),
        "n": inst.n(),
        "m": inst.machines(),
        "seed": seed,
        "flow": flow,
        "flow_decimal": flow.to_decimal(20),
        "kills": schedule.kill_count(),
        "baseline": ratio.baseline,
        "baseline_flow": ratio.baseline_flow,
        "ratio": ratio.decimal(),
        "ratio_kind": ratio.kind(inst.machines()),
    }))?;
    Ok(Ok(()))
}

/// The most restrictive model the segments could belong to.
fn infer_model(s: &Schedule) -> Model {
    if s.segments.iter().any(|x| x.outcome == Outcome::Killed) {
        return Model::KillRestart;
    }
    let mut machines: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut migrates = false;
    for seg in &s.segments {
        let e = machines.entry(seg.job).or_insert((seg.machine, 0));
        e.1 += 1;
        migrates |= e.0 != seg.machine;
    }
    if migrates {
        Model::PreemptiveMigratory
    } else if machines.values().any(|&(_, c)| c > 1) {
        Model::Preemptive
    } else {
        Model::NonPreemptive
    }
}

fn verify(instance: &Path, schedule: &Path, model: Option<Model>) -> Result<std::result::Result<(), Invalid>> {
    let inst = read_instance(instance)?;
    let mut s = read_schedule_file(schedule, model.unwrap_or(Model::KillRestart))?;
    if model.is_none() {
        s.model = infer_model(&s);
    }
    let report = validate_schedule(&inst, &s)?;
    if !report.is_ok() {
        return Ok(Err(Invalid(format!("invalid {} schedule:\n{report}", s.model))));
    }
    print_json(&json!({ "valid": true, "model": s.model.to_string(), "flow": flow_sum(&inst, &s)? }))?;
    Ok(Ok(()))
}

fn bench(cfg: &BenchConfig, csv: Option<&Path>, exact: bool) -> Result<()> {
    let rows = run_bench(cfg)?;
    match csv {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(f);
            write_bench_csv(&mut w, &rows, exact)?;
            w.flush()?;
            eprintln!("{} rows written to {}", rows.len(), p.display());
        }
        None => write_bench_csv(io::stdout().lock(), &rows, exact)?,
    }
    Ok(())
}

fn duel_policy(alg: Algorithm, n: usize, m: usize) -> Result<Box<dyn Policy>> {
    Ok(match alg {
        Algorithm::Greedy => Box::new(Greedy::new()),
        Algorithm::DetNp => Box::new(DetNp::new(DetNpConfig::new(n, m))),
        Algorithm::KillRestart => Box::new(KillRestart::new(n, m)),
        Algorithm::KillRestartUnknownN => Box::new(UnknownN::new(m)),
        other => bail!("{other} is not an event-driven policy; duel supports greedy, det-np, kill-restart, kill-restart-unknown-n"),
    })
}

fn duel_summary(r: &DuelReport) -> serde_json::Value {
    json!({
        "jobs": r.instance.n(),
        "finished": r.finished,
        "alg_flow": r.alg_flow,
        "witness_flow": r.witness_flow,
        "ratio_lower_bound": (&r.alg_flow / &r.witness_flow).to_decimal(20),
    })
}

#[allow(clippy::too_many_arguments)]
fn duel(
    adversary: Adversary,
    alg: Algorithm,
    n: usize,
    m: usize,
    n1: Option<usize>,
    trials: u64,
    seed: u64,
    transcript: Option<&Path>,
) -> Result<()> {
    match adversary {
        Adversary::RestartLb => {
            if m != 1 {
                bail!("restart-lb is a single-machine adversary");
            }
            let mut pol = duel_policy(alg, n, 1)?;
            let (r, info) = duel_restart_lb(&mut *pol, n)?;
            if let Some(p) = transcript {
                write_transcript(p, &r.run.transcript)?;
            }
            let mut v = duel_summary(&r);
            v["adversary"] = json!("restart-lb");
            v["branch"] = json!(info.branch.map(|b| format!("{b:?}")));
            v["t_star"] = json!(info.t_star);
            v["early_exit"] = json!(info.early_exit);
            v["tail"] = json!(info.tail);
            v["phase2_flow"] = json!(phase2_flow(&r, &info));
            print_json(&v)
        }
        Adversary::Nm2 => {
            let mut pol = duel_policy(alg, n, m)?;
            let (r, info) = duel_nm2(&mut *pol, n, m)?;
            if let Some(p) = transcript {
                write_transcript(p, &r.run.transcript)?;
            }
            let mut v = duel_summary(&r);
            v["adversary"] = json!("nm2");
            v["first_start"] = json!(info.first_start);
            v["batches"] = json!(info.batches);
            v["small_jobs"] = json!(info.small_jobs);
            print_json(&v)
        }
        Adversary::UnknownN => {
            let n1 = n1.context("unknown-n needs --n1")?;
            let d = duel_unknown_n(
                |inst: &Instance, trial| {
                    run_algorithm(alg, inst, flowlab::algorithms::rng::derive_seed(seed, &[trial]))
                },
                n,
                n1,
                m,
                trials,
            )?;
            let fam = &d.family;
            let (class, t) = match d.class {
                UnknownNClass::TypeA { t } => ("A", Some(t)),
                UnknownNClass::TypeB => ("B", None),
            };
            let s = run_algorithm(alg, &fam.instance, seed)?;
            let alg_flow = flow_sum(&fam.instance, &s)?;
            if let Some(p) = transcript {
                let (_, events) = run_algorithm_traced(alg, &fam.instance, seed)?;
                write_transcript(p, &events)?;
            }
            print_json(&json!({
                "adversary": "unknown-n",
                "class": class,
                "t": t,
                "x": d.x,
                "y": d.y,
                "trials": d.trials,
                "margin": d.margin(),
                "family": fam.family(),
                "jobs": fam.instance.n(),
                "alg_flow": alg_flow,
                "witness_flow": fam.witness_flow,
                "ratio_lower_bound": (&alg_flow / &fam.witness_flow).to_decimal(20),
            }))
        }
    }
}

fn parse_cell(s: &str) -> Result<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let q: TimeQ = s.parse().map_err(|e| anyhow::anyhow!("cannot read {s:?} as a number: {e}"))?;
    Ok(q.to_f64())
}

fn fit(csv_path: &Path, x: &str, y: &str) -> Result<()> {
    let mut rdr = csv::Reader::from_path(csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("no column {name:?}"));
    let (xi, yi) = (col(x)?, col(y)?);
    // Keyed by the x cell's bit pattern so equal values aggregate.
    let mut groups: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let xv = parse_cell(&rec[xi])?;
        let yv = parse_cell(&rec[yi])?;
        let g = groups.entry(xv.to_bits()).or_insert((xv, 0.0, 0));
        g.1 += yv;
        g.2 += 1;
    }
    let points: Vec<(f64, f64)> = groups.values().map(|&(xv, sum, c)| (xv, sum / c as f64)).collect();
    let f = fit_scaling(&points)?;
    print_json(&json!({
        "x": x,
        "y": y,
        "points": points.len(),
        "slope": f.slope,
        "intercept": f.intercept,
        "r2": f.r2,
    }))
}
