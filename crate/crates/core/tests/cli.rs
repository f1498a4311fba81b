use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn driftbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftbench"))
        .args(args)
        .env("DRIFTBENCH_LOG", "error")
        .output()
        .expect("binary runs")
}

fn small_stream(dir: &Path) -> String {
    let out = dir.join("synth");
    let o = driftbench(&["synth", "--order", "A,B", "--len", "300", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("stream.csv").to_string_lossy().into_owned()
}

#[test]
fn synth_writes_stream_and_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_stream(dir.path());
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 601);
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("synth/ground_truth.json")).unwrap()).unwrap();
    assert_eq!(truth["change_points"], serde_json::json!([300]));
}

#[test]
fn run_writes_report_and_drift_log() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_stream(dir.path());
    let out = dir.path().join("run");
    let o = driftbench(&[
        "run", "--dataset", &csv, "--strategy", "regular_update", "--seed", "7", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report_regular_update.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["scored"], 500);
    assert_eq!(
        fs::read_to_string(out.join("drifts_regular_update.csv")).unwrap(),
        "instance_index,kind,distribution_id\n"
    );
}

#[test]
fn compare_tabulates_each_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_stream(dir.path());
    let out = dir.path().join("cmp");
    let o = driftbench(&[
        "compare", "--dataset", &csv, "--strategies", "initial_learn,regular_retrain,regular_update",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("dataset,strategy,accuracy"));
}

#[test]
fn out_of_range_rho_is_a_usage_error() {
    let o = driftbench(&["run", "--dataset", "missing.csv", "--rho", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = driftbench(&["run", "--dataset", "x.csv", "--colour", "red"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--colour"));
}

#[test]
fn missing_dataset_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = driftbench(&["run", "--dataset", "/nonexistent/d.csv", "--strategy", "initial_learn", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let o = driftbench(&["run", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = String::from_utf8_lossy(&o.stdout);
    for flag in ["--rho", "--batch-size", "--seq-len", "--lambda", "--retrain-interval", "--max-instances", "--seed", "--out", "--strategy", "--config", "--verbosity"] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
    for default in ["[default: 100]", "[default: 4]", "[default: 1]", "[default: driftgan]", "[default: rho]"] {
        assert!(help.contains(default), "{default} missing from help");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_stream(dir.path());
    let cfg = dir.path().join("bench.conf");
    fs::write(&cfg, format!("# run settings\nstrategy = initial_learn\nrho = 50\ndataset = {csv}\n")).unwrap();
    let out = dir.path().join("o");
    let o = driftbench(&["run", "--config", cfg.to_str().unwrap(), "--rho", "60", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report_initial_learn.json")).unwrap()).unwrap();
    assert_eq!(report["warmup"], 60);
    assert_eq!(report["scored"], 540);
}

#[test]
fn identical_arguments_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_stream(dir.path());
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = driftbench(&["run", "--dataset", &csv, "--strategy", "regular_retrain", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let mut r: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("report_regular_retrain.json")).unwrap()).unwrap();
        r["wall_time_secs"] = serde_json::Value::Null;
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn driftgan_on_a_synthetic_config_logs_drifts() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    let o = driftbench(&["synth", "--order", "A,B,A", "--len", "600", "--seed", "2", "--out", synth.to_str().unwrap()]);
    assert!(o.status.success());
    let out = dir.path().join("run");
    let o = driftbench(&[
        "run", "--dataset", synth.join("stream.synth").to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report_driftgan.json")).unwrap()).unwrap();
    assert_eq!(report["detection"]["delays"].as_array().unwrap().len(), 2);
    let log = fs::read_to_string(out.join("drifts_driftgan.csv")).unwrap();
    assert!(log.lines().nth(1).is_some_and(|l| l.contains(",new,2")), "{log}");
}
