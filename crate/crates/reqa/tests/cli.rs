use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

const MINI: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mini_squad.json");

fn reqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reqa")).args(args).env_remove("REQA_DATA_DIR").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = reqa(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_code(out: &Output) -> String {
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["code"].as_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn end_to_end_run_is_fast_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let started = Instant::now();
    ok(&["--threads", "1", "run", "--in", MINI, "--out", s(&a)]);
    assert!(started.elapsed().as_secs_f64() < 5.0);
    ok(&["--threads", "3", "run", "--in", MINI, "--out", s(&b)]);
    for f in ["report.json", "table.md", "stats.json", "stats.md", "vectors/answers.rqav", "bm25.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(!a.join(".stale").exists());

    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let entries = report.as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for e in entries {
        for key in ["granularity", "mrr", "r_at", "r_at_any_hit", "by_type", "n_questions", "n_candidates", "config"] {
            assert!(e.get(key).is_some(), "{key}");
        }
        for n in ["1", "5", "10"] {
            assert!(e["r_at"][n].is_f64());
        }
        assert_eq!(e["n_questions"], 50);
    }
}

#[test]
fn stage_by_stage() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| -> PathBuf { dir.path().join(name) };
    let task = p("task");
    ok(&["convert", "--format", "squad", "--in", MINI, "--out", s(&p("clean.json"))]);
    ok(&["index", "build", "--corpus", s(&p("clean.json")), "--out", s(&task)]);
    ok(&["index", "encode", "--task", s(&task), "--encoder", "hash-tfidf", "--dim", "512", "--alpha", "0.75"]);
    ok(&["index", "bm25", "--corpus", s(&task), "--k1", "1.2", "--b", "0.75", "--out", s(&p("bm25.json"))]);
    let answers = task.join("answers.rqav");
    let questions = task.join("questions.rqav");
    ok(&["index", "ivf", "--task", s(&task), "--answers-vec", s(&answers), "--lists", "4", "--probes", "4", "--out", s(&p("ivf.json"))]);
    ok(&[
        "eval",
        "--task",
        s(&task),
        "--answers-vec",
        s(&answers),
        "--questions-vec",
        s(&questions),
        "--bm25-index",
        s(&p("bm25.json")),
        "--out",
        s(&p("exact.json")),
    ]);
    ok(&[
        "eval",
        "--task",
        s(&task),
        "--answers-vec",
        s(&answers),
        "--questions-vec",
        s(&questions),
        "--ann",
        "--probes",
        "4",
        "--ivf-index",
        s(&p("ivf.json")),
        "--out",
        s(&p("ann.json")),
    ]);
    let table = ok(&["compare", s(&p("exact.json")), s(&p("ann.json"))]);
    assert!(table.contains("R@10"));
    ok(&["compare", s(&p("exact.json")), s(&p("exact.json")), "--json", s(&p("self.json")), "--out", s(&p("self.md"))]);
    let cmp: serde_json::Value = serde_json::from_slice(&fs::read(p("self.json")).unwrap()).unwrap();
    assert!(cmp["deltas"].as_array().unwrap().iter().all(|d| d["mrr"] == 0.0));
    ok(&["stats", "--task", s(&task), "--out", s(&p("stats.json")), "--markdown", s(&p("stats.md"))]);
    assert!(fs::read_to_string(p("stats.md")).unwrap().contains("| what |"));

    let spans = ok(&["segment", "--in", MINI, "--format", "squad", "--show-offsets"]);
    let first: serde_json::Value = serde_json::from_str(spans.lines().next().unwrap()).unwrap();
    assert_eq!((first["start"].as_u64(), first["end"].as_u64()), (Some(0), Some(57)));

    // Vectors encoded for a different corpus are refused.
    let other = p("other");
    let two = fs::read_to_string(MINI).unwrap().replace("Port Elling", "Port Ellinq");
    fs::write(p("two.json"), two).unwrap();
    ok(&["index", "build", "--corpus", s(&p("two.json")), "--out", s(&other)]);
    let out =
        reqa(&["eval", "--task", s(&other), "--answers-vec", s(&answers), "--questions-vec", s(&questions), "--out", s(&p("x.json"))]);
    assert_eq!(error_code(&out), "fingerprint_mismatch");
    let out = reqa(&["eval", "--task", s(&other), "--bm25-index", s(&p("bm25.json")), "--out", s(&p("x.json"))]);
    assert_eq!(error_code(&out), "fingerprint_mismatch");
}

#[test]
fn failures_report_json_and_leave_stale_marker() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"data":[{"title":"t","paragraphs":[{"context":"Abc.","qas":[{"id":"q9","question":"Q?","answers":[{"answer_start":0,"text":"Xyz"}]}]}]}]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = reqa(&["run", "--in", s(&bad), "--out", s(&out_dir)]);
    assert_eq!(error_code(&out), "validation");
    assert!(String::from_utf8_lossy(&out.stderr).contains("q9"));
    assert!(out_dir.join(".stale").exists());

    let out = reqa(&["convert", "--in", s(&dir.path().join("missing.json")), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(error_code(&out), "io");
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"encoder": {"dim": 64}, "bm25": {"enabled": false}, "cutoffs": [1, 3]}"#).unwrap();
    let out_dir = dir.path().join("out");
    ok(&["--config", s(&config), "run", "--in", MINI, "--out", s(&out_dir)]);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    let entries = report.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["config"]["settings"]["encoder"]["dim"], 64);
    assert!(entries[0]["r_at"].get("3").is_some());

    fs::write(&config, r#"{"encoder": {"dimension": 64}}"#).unwrap();
    let out = reqa(&["--config", s(&config), "run", "--in", MINI, "--out", s(&out_dir)]);
    assert_eq!(error_code(&out), "schema");
}

#[test]
fn data_dir_resolves_relative_inputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(MINI, dir.path().join("mini-copy.json")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_reqa"))
        .args(["convert", "--in", "mini-copy.json", "--out", s(&dir.path().join("c.json"))])
        .env("REQA_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn nq_conversion() {
    let dir = tempfile::tempdir().unwrap();
    let nq = dir.path().join("nq.jsonl");
    fs::write(
        &nq,
        concat!(
            r#"{"question":"who wrote the notes","context":"Ada wrote the notes. They were long.","block_type":"paragraph","spans":[{"start":0,"length":3}]}"#,
            "\n",
            r#"{"question":"table","context":"Ada | 1815","block_type":"table","spans":[{"start":6,"length":4}]}"#,
            "\n"
        ),
    )
    .unwrap();
    let summary = ok(&["convert", "--format", "nq-simplified", "--in", s(&nq), "--out", s(&dir.path().join("nq.json"))]);
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["nq_filter"]["retained"], 1);
    assert_eq!(v["counts"]["questions"], 1);
    ok(&["run", "--format", "nq-simplified", "--in", s(&nq), "--out", s(&dir.path().join("run"))]);
}
