use std::path::Path;
use std::process::{Command, Output};

fn spinsqueeze(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsqueeze"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn xi_sweep_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsqueeze(&["xi-sweep", "--n", "10", "--grid", "50"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("xi_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("chi_t,xi,bloch_length"));
    assert_eq!(lines.count(), 51);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("xi_sweep.meta.json")).unwrap())
            .unwrap();
    assert!(meta.is_object());
}

#[test]
fn json_format_is_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsqueeze(
        &["xi-sweep", "--n", "6", "--grid", "10", "--format", "json"],
        dir.path(),
    );
    assert!(out.status.success());
    let file = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("xi_sweep")
                && !p.to_string_lossy().ends_with(".meta.json")
        })
        .expect("sweep output");
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(file).unwrap()).unwrap();
    assert_eq!(v["columns"]["xi"].as_array().unwrap().len(), 11);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["xi-sweep", "--grid", "0"][..],
        &["xi-sweep", "--n", "0"],
        &["xi-sweep", "--loops", "3"],
        &["husimi", "--chi-t-max", "0.2"],
        &["phase-gate", "--n-max-override", "1"],
        &["phase-gate", "--lambda-over-delta", "-0.1"],
    ] {
        let out = spinsqueeze(args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 10, "unknown_key": 1}"#).unwrap();
    let out = spinsqueeze(&["xi-sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    let out = spinsqueeze(
        &["xi-sweep", "--config", missing.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cutoff_overflow_exits_3_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("run");
    let out = spinsqueeze(
        &[
            "phase-gate",
            "--n",
            "10",
            "--lambda-over-delta",
            "0.3",
            "--n-max-override",
            "5",
            "--loops",
            "1",
        ],
        &target,
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_max"));
    assert!(!target.exists() || std::fs::read_dir(&target).unwrap().next().is_none());
}

#[test]
fn oversized_oracle_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsqueeze(&["oracle-check", "--n", "13"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oracle_check_reports_all_passing() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsqueeze(&["oracle-check", "--n", "6"], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("oracle_check.json")).unwrap())
            .unwrap();
    assert!(report.to_string().contains("passed"));
}

#[test]
fn phase_gate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsqueeze(&["phase-gate", "--n", "4", "--loops", "2"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(dir.path().join("phase_vs_m.csv")).unwrap();
    assert!(table.starts_with("m,phase,fit_residual"));
    assert_eq!(table.lines().count(), 6);
    assert!(dir.path().join("phase_gate_trace.csv").is_file());
}

#[test]
fn squeeze_db_prints_value() {
    let out = Command::new(env!("CARGO_BIN_EXE_spinsqueeze"))
        .args(["squeeze-db", "--var-squeezed", "0.4571"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let db: f64 = text
        .split_whitespace()
        .find_map(|w| w.parse().ok())
        .expect("numeric output");
    assert!((db + 3.40).abs() < 0.01, "{text}");
    let bad = Command::new(env!("CARGO_BIN_EXE_spinsqueeze"))
        .args(["squeeze-db", "--var-squeezed", "0"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
