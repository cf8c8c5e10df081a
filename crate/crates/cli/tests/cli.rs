use std::fs;
use std::path::Path;

use qlm_cli::run_with;

fn qlm(args: &[&str]) -> i32 {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    run_with(std::iter::once("qlm").chain(args.iter().copied()), &mut out, &mut err)
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn csv_rerun_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let out1 = first.path().to_str().unwrap();
    assert_eq!(qlm(&["susceptibility-scan", "--out", out1]), 0);
    let csv = first.path().join("susceptibility-scan.csv");
    let out2 = second.path().to_str().unwrap();
    assert_eq!(qlm(&["susceptibility-scan", "--config", csv.to_str().unwrap(), "--out", out2]), 0);
    for name in ["susceptibility-scan.csv", "susceptibility-scan.svg", "susceptibility-scan-summary.json"] {
        assert_eq!(
            fs::read(first.path().join(name)).unwrap(),
            fs::read(second.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn csv_header_carries_units_and_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qlm(&["operating-point", "--out", dir.path().to_str().unwrap()]), 0);
    let text = fs::read_to_string(dir.path().join("operating-point.csv")).unwrap();
    let header: Vec<&str> = text.lines().take(4).collect();
    assert!(header[0].starts_with("# qlm operating-point"));
    assert!(header[1].starts_with("# units:"));
    assert!(header[2].starts_with("# config: {"));
    assert_eq!(header[3], "delta_b,pump_rate,re_eps,im_eps,re_chi,im_chi");
}

#[test]
fn empty_window_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"fom_scan": {"window": [-1.4, -1.41]}}"#);
    assert_eq!(qlm(&["fom-scan", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"geometry": {"period": 0.25}}"#);
    assert_eq!(qlm(&["operating-point", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 2);
}

#[test]
fn bad_flag_is_a_usage_error() {
    assert_eq!(qlm(&["contour", "--format", "xml"]), 2);
    assert_eq!(qlm(&["--workers", "2"]), 2);
}

#[test]
fn zero_workers_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qlm(&["operating-point", "--workers", "0", "--out", dir.path().to_str().unwrap()]), 2);
}

#[test]
fn oracle_suite_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(qlm(&["oracle-verify", "--seed", "7", "--out", out]), 0);
    let cfg = write_config(dir.path(), r#"{"oracle": {"samples": 20, "negative_control": true}}"#);
    assert_eq!(qlm(&["oracle-verify", "--seed", "7", "--config", &cfg, "--out", out]), 1);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle-verify-summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], false);
    assert!(summary["worst_sample"]["zeta"].is_number());
}

#[test]
fn pumped_oracle_checks_physicality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"drive": {"pump_rate": 0.002}, "oracle": {"samples": 10}}"#);
    assert_eq!(qlm(&["oracle-verify", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle-verify-summary.json")).unwrap()).unwrap();
    assert_eq!(summary["mode"], "pump-characterization");
}

#[test]
fn json_format_writes_json_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qlm(&["operating-point", "--format", "json", "--out", dir.path().to_str().unwrap()]), 0);
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("operating-point.json")).unwrap()).unwrap();
    assert!(table.is_object());
}

#[test]
fn unreachable_lossless_point_is_a_physics_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"search": {"window": [3.0, 3.1]}}"#);
    assert_eq!(qlm(&["operating-point", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 1);
}

#[test]
fn contour_exit_code_follows_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"contour": {"ky_points": 64}}"#);
    let code = qlm(&["contour", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("contour-summary.json")).unwrap()).unwrap();
    let verdicts: Vec<&str> = summary["contours"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["topology"].as_str().unwrap())
        .collect();
    assert_eq!(verdicts.len(), 2);
    assert_eq!(code, if verdicts.contains(&"INDETERMINATE") { 3 } else { 0 });
    assert!(dir.path().join("contour-0.csv").exists() && dir.path().join("profile-1.csv").exists());
}

#[test]
fn binary_reports_errors_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{not json");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_qlm"))
        .args(["operating-point", "--config", &cfg, "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "Config");
}
