use std::fs;
use std::path::Path;

use noma_core::cli::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn noma(args: &[&str]) -> i32 {
    run(std::iter::once("noma").chain(args.iter().copied()))
}

fn run_to_file(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = dir.join(name);
    let out_str = out.to_str().unwrap();
    let mut full = args.to_vec();
    full.extend(["--out", out_str]);
    assert_eq!(noma(&full), EXIT_OK, "{args:?}");
    fs::read_to_string(out).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn regions_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to_file(dir.path(), "regions.csv", &["regions", "--x", "1", "--y", "3", "--points", "201"]);
    assert!(!text.contains('\r'));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["region", "r2", "r1"]);
    assert_eq!(rows.len(), 3 * 201);

    let noma_last = rows.iter().rfind(|r| r[0] == "noma").unwrap();
    assert!((num(&noma_last[1]) - 2.5f64.log2()).abs() < 1e-12);
    for r in rows.iter().filter(|r| r[0] == "tdma") {
        assert!((num(&r[2]) / 1.0 + num(&r[1]) / 2.0 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn regions_optional_points() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["regions", "--x", "3", "--y", "10", "--points", "5", "--a2", "0.2", "--b2", "0.5"];
    let (_, rows) = csv_rows(&run_to_file(dir.path(), "r.csv", &args));
    let names: Vec<&str> = rows.iter().skip(15).map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["point_N", "point_B", "point_C", "point_D", "point_T"]);
}

#[test]
fn manifest_sidecar_records_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to_file(dir.path(), "ev.csv", &["events", "--m", "1", "--n", "10", "--method", "closed"]);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ev.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "events");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["timestamp"].as_u64().is_some());
    assert_eq!(manifest["params"]["rho_db"], 25.0);
    let digest = format!("{:x}", Sha256::digest(text.as_bytes()));
    assert_eq!(manifest["outputs"][0]["sha256"], digest.as_str());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["events", "--m", "2", "--n", "7", "--method", "mc", "--trials", "20000", "--format", "json"];
    let a = run_to_file(dir.path(), "a.json", &args);
    let b = run_to_file(dir.path(), "b.json", &args);
    assert_eq!(a, b);
    let doc: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(doc["manifest"]["command"], "events");
    assert_eq!(doc["records"][0]["method"], "mc");
    assert!(doc["records"][0]["stderr_e2"].as_f64().unwrap() > 0.0);
}

#[test]
fn special_case_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["events", "--m", "1", "--n", "10", "--a2-mode", "special", "--method", "closed"];
    let (header, rows) = csv_rows(&run_to_file(dir.path(), "s.csv", &args));
    assert_eq!(
        header,
        ["m", "n", "method", "p_e1", "p_e2", "p_e3", "p_e4", "stderr_e1", "stderr_e2", "stderr_e3", "stderr_e4"]
    );
    assert!((num(&rows[0][4]) - 0.998046875).abs() < 1e-12);
    let total: f64 = rows[0][3..7].iter().map(|s| num(s)).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(rows[0][7], "");
}

#[test]
fn default_pairs_and_method_all() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["events", "--trials", "20000", "--tol", "1e-5"];
    let (_, rows) = csv_rows(&run_to_file(dir.path(), "all.csv", &args));
    let pairs: Vec<(String, String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone(), r[2].clone())).collect();
    assert_eq!(pairs.len(), 12);
    assert_eq!(pairs[0], ("1".into(), "2".into(), "closed".into()));
    assert_eq!(pairs[11], ("1".into(), "10".into(), "mc".into()));
}

#[test]
fn general_time_split_skips_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["events", "--m", "2", "--n", "7", "--b2", "0.3", "--trials", "20000", "--tol", "1e-5"];
    let (_, rows) = csv_rows(&run_to_file(dir.path(), "b.csv", &args));
    let methods: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(methods, ["quadrature", "mc"]);
    assert_eq!(noma(&["events", "--b2", "0.3", "--method", "closed"]), EXIT_USAGE);
}

#[test]
fn sweep_rows_and_trend() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep-n", "--M", "10", "--m", "1", "--method", "closed"];
    let (header, rows) = csv_rows(&run_to_file(dir.path(), "sweep.csv", &args));
    assert_eq!(header, ["n", "method", "p_e2", "stderr_e2"]);
    assert_eq!(rows.len(), 9);
    assert!(num(&rows[8][2]) > num(&rows[0][2]));
}

#[test]
fn rates_columns() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["rates", "--rho-db", "0,30", "--trials", "20000"];
    let (header, rows) = csv_rows(&run_to_file(dir.path(), "rates.csv", &args));
    assert_eq!(header.len(), 9);
    assert_eq!(header[0], "rho_db");
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r[1..].iter().all(|v| num(v) >= 0.0));
    }
}

#[test]
fn validate_suites_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to_file(dir.path(), "v.csv", &["validate", "--suite", "regions", "--seed", "7"]);
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["suite", "check", "status", "detail"]);
    assert!(rows.iter().all(|r| r[2] == "pass"));
    assert_eq!(noma(&["validate", "--suite", "propositions", "--seed", "7"]), EXIT_OK);
    let bad_suite = noma(&["validate", "--suite", "nope"]);
    assert_eq!(bad_suite, EXIT_USAGE);
    assert_ne!(bad_suite, EXIT_VALIDATION);
}

#[test]
fn usage_errors() {
    assert_eq!(noma(&["regions", "--x", "3", "--y", "1"]), EXIT_USAGE);
    assert_eq!(noma(&["events", "--m", "7", "--n", "2"]), EXIT_USAGE);
    assert_eq!(noma(&["events", "--a2-mode", "fixed:abc"]), EXIT_USAGE);
    assert_eq!(noma(&["events", "--m", "3"]), EXIT_USAGE);
    assert_eq!(noma(&["rates", "--trials", "0"]), EXIT_USAGE);
    assert_eq!(noma(&["frobnicate"]), EXIT_USAGE);
    let missing_dir = ["regions", "--x", "1", "--y", "3", "--out", "/nonexistent/dir/out.csv"];
    assert_eq!(noma(&missing_dir), EXIT_USAGE);
}

#[test]
fn refusing_closed_forms_are_skipped_under_all() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["events", "--M", "60", "--m", "20", "--n", "45", "--method", "all", "--trials", "20000", "--tol", "1e-4"];
    let (_, rows) = csv_rows(&run_to_file(dir.path(), "big.csv", &args));
    let methods: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(methods, ["quadrature", "mc"]);
    assert_eq!(noma(&["events", "--M", "60", "--m", "20", "--n", "45", "--method", "closed"]), EXIT_NUMERICAL);
}
