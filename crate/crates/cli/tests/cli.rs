use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn case_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ieee118.json")
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let cfg =
        format!(r#"{{"case": {:?}, "out": "out", "sim": {{"t_end": 5.0}}{extra}}}"#, case_path().display().to_string());
    let p = dir.join("run.json");
    std::fs::write(&p, cfg).unwrap();
    p
}

fn smrgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smrgrid"))
        .args(args)
        .env_remove("SMRGRID_OUT")
        .env_remove("SMRGRID_SEED")
        .env_remove("SMRGRID_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn profile_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    ok(&smrgrid(&["--config", cfg.to_str().unwrap(), "profile"]));
    let csv = std::fs::read_to_string(dir.path().join("out/profile.csv")).unwrap();
    assert!(csv.starts_with("timestamp_s,u,p_it_mw,q_cool_mwth,n_ch,p_thermal_mw,p_total_mw"));
    assert_eq!(csv.lines().count(), 2017);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/profile_summary.json")).unwrap()).unwrap();
    assert!((summary["peak_total_mw"].as_f64().unwrap() - 60.0).abs() < 1e-6);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&smrgrid(&["--config", c, "--seed", "1", "--out", dir.path().join("a").to_str().unwrap(), "profile"]));
    ok(&smrgrid(&["--config", c, "--seed", "2", "--out", dir.path().join("b").to_str().unwrap(), "profile"]));
    let a = std::fs::read(dir.path().join("a/profile.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/profile.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn powerflow_without_profile_writes_base_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#", "profile": null"#);
    ok(&smrgrid(&["--config", cfg.to_str().unwrap(), "powerflow"]));
    let csv = std::fs::read_to_string(dir.path().join("out/powerflow_base.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 118);
    assert!(!dir.path().join("out/sweep_with_ies.csv").exists());
}

#[test]
fn transient_outputs_and_halving() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#", "transient": {"contingency": {"kind": "BusFault", "target": {"mode": "explicit", "id": 26}}}"#,
    );
    ok(&smrgrid(&["--config", cfg.to_str().unwrap(), "transient", "--snapshot", "10", "--dt-halving"]));
    let out = dir.path().join("out");
    for f in ["transient.csv", "events.json", "metrics.json", "transient.gp"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["snapshot"]["index"], 10);
    assert!(m["dt_halving_max_state_diff"].as_f64().unwrap() >= 0.0);
    assert!(m["metrics"]["v_min_pu"].as_f64().unwrap() < m["metrics"]["v_pre_pu"].as_f64().unwrap());
    let events: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("events.json")).unwrap()).unwrap();
    assert_eq!(events.as_array().unwrap().len(), 2);
}

#[test]
fn compare_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#", "compare": {"random": {"count": 2, "hops": 3}, "snapshots": {"min_median_max": false, "explicit": [5]}}"#,
    );
    let c = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&smrgrid(&["--config", c, "--out", a.to_str().unwrap(), "compare"]));
    ok(&smrgrid(&["--config", c, "--out", b.to_str().unwrap(), "--jobs", "1", "compare"]));
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "compare_report.json"));
    assert!(names.iter().any(|n| n.to_string_lossy().ends_with("_with_ies.csv")));
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn errors_are_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#", "bogus": 1"#);
    let out = smrgrid(&["--config", cfg.to_str().unwrap(), "profile"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");

    let out = smrgrid(&["--config", dir.path().join("missing.json").to_str().unwrap(), "profile"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

#[test]
fn compare_needs_a_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#", "profile": null"#);
    let out = smrgrid(&["--config", cfg.to_str().unwrap(), "compare"]);
    assert_eq!(out.status.code(), Some(2));
}
