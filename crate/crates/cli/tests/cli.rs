use std::path::Path;
use std::process::{Command, Output};

fn flowlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowlab")).args(args).output().expect("spawn flowlab")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_writes_instance_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let v = json(&flowlab(&["gen", "--family", "multi-lb", "--n", "58", "--m", "1", "--seed", "7", "--out", p(&inst)]));
    assert_eq!(v["jobs"], 55);
    let witness = dir.path().join("i.witness.jsonl");
    assert!(witness.exists());
    let v = json(&flowlab(&["verify", "--instance", p(&inst), "--schedule", p(&witness)]));
    assert_eq!(v["valid"], true);
    assert_eq!(v["model"], "non-preemptive");
}

#[test]
fn run_then_verify_kill_restart() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let sched = dir.path().join("s.jsonl");
    let trans = dir.path().join("t.jsonl");
    json(&flowlab(&["gen", "--family", "multi-restart-lb", "--n", "80", "--m", "2", "--seed", "3", "--out", p(&inst)]));
    let v = json(&flowlab(&[
        "run", "--alg", "kill-restart", "--instance", p(&inst), "--out", p(&sched), "--transcript", p(&trans),
    ]));
    assert_eq!(v["model"], "kill-restart");
    let v = json(&flowlab(&["verify", "--instance", p(&inst), "--schedule", p(&sched), "--model", "kill-restart"]));
    assert_eq!(v["valid"], true);
    let text = std::fs::read_to_string(&trans).unwrap();
    assert!(text.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(text.contains("\"classify\""));
}

#[test]
fn verify_rejects_overlap_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    std::fs::write(&inst, r#"{"m":1,"jobs":[{"id":0,"r":"0","p":"2"},{"id":1,"r":"0","p":"1"}]}"#).unwrap();
    let sched = dir.path().join("s.jsonl");
    std::fs::write(
        &sched,
        concat!(
            r#"{"job":0,"machine":0,"start":"0","end":"2","outcome":"completed"}"#,
            "\n",
            r#"{"job":1,"machine":0,"start":"1","end":"2","outcome":"completed"}"#,
            "\n"
        ),
    )
    .unwrap();
    let out = flowlab(&["verify", "--instance", p(&inst), "--schedule", p(&sched), "--model", "non-preemptive"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(flowlab(&["run", "--alg", "nope", "--instance", "x.json"]).status.code(), Some(2));
    assert_eq!(flowlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(flowlab(&["run", "--alg", "greedy", "--instance", "/does/not/exist.json"]).status.code(), Some(2));
}

#[test]
fn bench_row_count_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path, threads: &str| {
        flowlab(&[
            "bench", "--alg", "rand-multi", "--family", "multi-lb", "--n", "58,230,926", "--m", "1", "--reps", "20",
            "--seed", "11", "--csv", p(out), "--threads", threads,
        ])
    };
    assert!(args(&a, "1").status.success());
    assert!(args(&b, "4").status.success());
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 61);
    assert!(text.starts_with("family,alg,n,m,seed,alg_flow,baseline,baseline_flow,ratio"));

    let v = json(&flowlab(&["fit", "--csv", p(&a), "--x", "n", "--y", "ratio"]));
    assert_eq!(v["points"], 3);
    assert!(v["slope"].as_f64().unwrap().is_finite());
}

#[test]
fn duels_report_flows() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    let v = json(&flowlab(&["duel", "--adversary", "restart-lb", "--alg", "greedy", "--n", "100", "--transcript", p(&t)]));
    assert_eq!(v["finished"], true);
    assert!(std::fs::read_to_string(&t).unwrap().contains("\"phase\""));
    let v = json(&flowlab(&["duel", "--adversary", "nm2", "--alg", "greedy", "--n", "40", "--m", "2"]));
    assert_eq!(v["adversary"], "nm2");
    let v = json(&flowlab(&[
        "duel", "--adversary", "unknown-n", "--alg", "kill-restart-unknown-n", "--n", "50", "--n1", "200", "--trials", "8",
    ]));
    assert!(v["class"] == "A" || v["class"] == "B");
    let out = flowlab(&["duel", "--adversary", "nm2", "--alg", "rand-multi", "--n", "40"]);
    assert_eq!(out.status.code(), Some(2));
}
