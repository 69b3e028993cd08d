use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hyptev(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyptev"))
        .args(args)
        .env("HYPTEV_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

const REFERENCE: [&str; 8] = ["--n", "2", "--R", "1", "--V0", "0.5", "--nu", "1"];

fn with_reference<'a>(command: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![command];
    v.extend_from_slice(&REFERENCE);
    v.extend_from_slice(extra);
    v
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn eigs_writes_roots_to_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyptev(dir.path(), &with_reference("eigs", &["--lambda-max", "2000"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("eigs.csv")).unwrap();
    assert!(csv.starts_with("index,lambda,sqrt_lambda,det_residual\n"));
    assert!(csv_column(&csv, 1).len() >= 3);
}

#[test]
fn eigs_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = hyptev(dir.path(), &with_reference("eigs", &["--format", "json", "--output", name]));
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["command"], "eigs");
    assert!(v["result"]["roots"].as_array().unwrap().len() >= 3);
}

#[test]
fn invalid_parameters_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad_potential = ["eigs", "--n", "2", "--R", "1", "--V0", "1.5", "--nu", "1"];
    assert_eq!(hyptev(dir.path(), &bad_potential).status.code(), Some(2));
    assert_eq!(hyptev(dir.path(), &["eigs", "--n", "2"]).status.code(), Some(2));
    assert_eq!(hyptev(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let too_far = with_reference("eigs", &["--lambda-max", "1e6"]);
    assert_eq!(hyptev(dir.path(), &too_far).status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn curve_crossings_match_eigs_roots() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hyptev(dir.path(), &with_reference("eigs", &[])).status.code(), Some(0));
    let out = hyptev(dir.path(), &with_reference("curves", &["--grid", "400", "--format", "json"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let roots = csv_column(&fs::read_to_string(dir.path().join("eigs.csv")).unwrap(), 1);
    let table: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("curves.json")).unwrap()).unwrap();
    let crossings: Vec<f64> = table["result"]["crossings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["lambda"].as_f64().unwrap())
        .collect();
    assert_eq!(crossings.len(), roots.len());
    for (c, r) in crossings.iter().zip(&roots).take(3) {
        assert!((c - r).abs() < 1e-2 * r, "{c} vs {r}");
    }
}

#[test]
fn curves_csv_has_stable_header() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_reference("curves", &["--grid", "60", "--lambda-max", "50", "--count", "2"]);
    assert_eq!(hyptev(dir.path(), &args).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert!(csv.starts_with("lambda,mu_1,mu_2\n"));
    assert_eq!(csv.lines().count(), 1 + 11);
    let small = with_reference("curves", &["--grid", "10"]);
    assert_eq!(hyptev(dir.path(), &small).status.code(), Some(2));
}

#[test]
fn corner_scan_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &'static str| -> Vec<&'static str> {
        vec!["corner", "--cone", "orthant", "--n", "2", "--degree", "3", "--samples", "100", "--seed", "7", "--output", name]
    };
    assert_eq!(hyptev(dir.path(), &args("a.json")).status.code(), Some(0));
    assert_eq!(hyptev(dir.path(), &args("b.json")).status.code(), Some(0));
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let reports = v["result"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r["max_abs"].as_f64().unwrap() > 0.0);
        assert!(r["witness"]["rho0"].is_array());
    }
    let sector = ["corner", "--cone", "sector", "--n", "3", "--degree", "1"];
    assert_eq!(hyptev(dir.path(), &sector).status.code(), Some(2));
}

#[test]
fn verify_identities_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = hyptev(dir.path(), &["verify", "--identity", "conjugation", "--K", "halfspace", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["pass"], true);
    for ratios in v["result"]["ratios"].as_array().unwrap() {
        for r in ratios.as_array().unwrap() {
            assert!(r.as_f64().unwrap() >= 3.5);
        }
    }
    for id in ["green", "sturm-liouville"] {
        let out = hyptev(dir.path(), &["verify", "--identity", id, "--n", "2", "--output", "v.json"]);
        assert_eq!(out.status.code(), Some(0), "{id}");
    }
    let ball = hyptev(dir.path(), &["verify", "--identity", "conjugation", "--K", "ball", "--n", "2"]);
    assert_eq!(ball.status.code(), Some(0));
}

#[test]
fn explicit_output_directory_flag_wins() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let flag = flag_dir.path().to_str().unwrap();
    let mut args = with_reference("eigs", &["--lambda-max", "200"]);
    args.extend_from_slice(&["--output-dir", flag]);
    assert_eq!(hyptev(env_dir.path(), &args).status.code(), Some(0));
    assert!(flag_dir.path().join("eigs.csv").exists());
    assert!(!env_dir.path().join("eigs.csv").exists());
}
