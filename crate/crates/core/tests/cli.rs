//! The `ml5g` binary driven as a subprocess.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ml5g_core::mlfo::{EventLog, StateDump, EXAMPLE_INTENT};
use ml5g_core::stats::mean;
use ml5g_core::underlay::{generate_deployment, DensityClass, Deployment, ThroughputRow};

fn ml5g(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ml5g"))
        .args(args)
        .env("ML5G_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sorted_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn generate_writes_one_file_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = ml5g(&[
            "generate",
            "--densities",
            "sparse,dense",
            "--seeds",
            "1,2,3",
            "--out",
            path(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = sorted_files(&a);
    assert_eq!(files.len(), 6);
    assert_eq!(files, sorted_files(&b));
    let back: Deployment = serde_json::from_slice(&fs::read(a.join("deployment_dense_2.json")).unwrap()).unwrap();
    assert_eq!(back, generate_deployment(DensityClass::Dense, 100.0, 2).unwrap());
}

#[test]
fn dry_run_prints_wiring_only() {
    let dir = tempfile::tempdir().unwrap();
    let intent = dir.path().join("intent.json");
    fs::write(&intent, EXAMPLE_INTENT).unwrap();
    let o = ml5g(&["run", "--intent", path(&intent), "--dry-run"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("cloud-0"));
    assert!(stdout.contains("stage instances"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn corrupt_intent_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let intent = dir.path().join("intent.json");
    fs::write(
        &intent,
        r#"{"use_case": "ap_association", "monitoring": {"eval_window": 0}}"#,
    )
    .unwrap();
    let o = ml5g(&["run", "--intent", path(&intent), "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("model_spec"), "{stderr}");
    assert!(stderr.contains("pipeline_spec"), "{stderr}");
}

#[test]
fn missing_intent_file_is_a_runtime_failure() {
    let o = ml5g(&["run", "--intent", "/nonexistent/intent.json", "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let intent = dir.path().join("intent.json");
    fs::write(&intent, EXAMPLE_INTENT).unwrap();
    let run_dir = dir.path().join("run");
    let o = ml5g(&["run", "--intent", path(&intent), "--out", path(&run_dir)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let state: StateDump = serde_json::from_slice(&fs::read(run_dir.join("state.json")).unwrap()).unwrap();
    assert_eq!(state.state.to_string(), "serving");
    let events = EventLog::parse_jsonl(&fs::read_to_string(run_dir.join("events.jsonl")).unwrap()).unwrap();
    assert_eq!(events.len(), state.events_logged);
    let seqs: Vec<u64> = events.iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (0..events.len() as u64).collect::<Vec<_>>());
    let model = fs::read(run_dir.join("model.json")).unwrap();
    assert_eq!(Some(ml5g_core::pipeline::content_hash(&model)), state.active_model_hash);

    let model_path = run_dir.join("model.json");
    let mut outputs = Vec::new();
    for name in ["eval-a", "eval-b"] {
        let out = dir.path().join(name);
        let o = ml5g(&[
            "evaluate",
            "--model",
            path(&model_path),
            "--densities",
            "sparse",
            "--seeds",
            "0,1,2",
            "--out",
            path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(sorted_files(&out));
    }
    assert_eq!(outputs[0], outputs[1]);

    let eval = dir.path().join("eval-a");
    let rows: Vec<ThroughputRow> = csv::Reader::from_path(eval.join("results.csv"))
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    let stas = 3 * DensityClass::Sparse.counts().1;
    assert_eq!(rows.len(), 2 * stas);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(eval.join("summary.json")).unwrap()).unwrap();
    for entry in summary.as_array().unwrap() {
        let strategy = entry["strategy"].as_str().unwrap();
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.strategy == strategy)
            .map(|r| r.throughput_mbps)
            .collect();
        assert_eq!(values.len(), stas);
        assert!((entry["mean"].as_f64().unwrap() - mean(&values)).abs() < 1e-9);
    }
}

#[test]
fn evaluate_without_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = ml5g(&[
        "evaluate",
        "--model",
        path(&dir.path().join("nope.json")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
