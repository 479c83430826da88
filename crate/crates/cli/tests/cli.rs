use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nlrq(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nlrq"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--quiet")
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const DIAG_1_4: &str = "[instance]\nkind = \"matrix\"\nmatrix = [[1.0, 0.0], [0.0, 4.0]]\n";

#[test]
fn compare_on_diagonal_matrix_agrees_with_one() {
    let dir = TempDir::new().unwrap();
    let out = nlrq(dir.path(), &format!("command = \"compare\"\n{DIAG_1_4}"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("out/compare.json"));
    for key in ["lambda_iterate", "lambda_flow", "lambda_oracle"] {
        let l = v[key].as_f64().unwrap();
        assert!((l - 1.0).abs() <= 1e-8, "{key} = {l}");
    }
    assert_eq!(v["agree"], true);
}

#[test]
fn invalid_exponent_exits_with_two_and_names_the_key() {
    let dir = TempDir::new().unwrap();
    let out = nlrq(dir.path(), "command = \"iterate\"\n[instance]\nkind = \"pdirichlet1d\"\np = 0.5\nn = 5\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`p`"), "{err}");
}

#[test]
fn unknown_key_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let out = nlrq(dir.path(), &format!("command = \"oracle\"\ncolour = 3\n{DIAG_1_4}"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn numeric_failure_exits_with_one_and_keeps_the_trace() {
    let dir = TempDir::new().unwrap();
    let config = "command = \"iterate\"\n[instance]\nkind = \"pdirichlet1d\"\np = 3.0\nn = 15\n[scheme]\ngrad_tol = 1e-300\n";
    let out = nlrq(dir.path(), config, &[]);
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("out/iterate_trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let summary = json(&dir.path().join("out/iterate_summary.json"));
    assert_eq!(summary["stop_reason"], "failed");
    assert!(summary["error"].as_str().unwrap().contains("inner solve"));
}

#[test]
fn iterate_and_flow_write_the_documented_schema() {
    let dir = TempDir::new().unwrap();
    for cmd in ["iterate", "flow"] {
        let config = format!("command = \"{cmd}\"\n[instance]\nkind = \"robin1d\"\np = 3.0\nn = 12\n");
        let out = nlrq(dir.path(), &config, &[]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read_to_string(dir.path().join(format!("out/{cmd}_trace.csv"))).unwrap();
        assert!(!csv.contains('\r'));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k_or_t,norm,phi,rq,ratio_or_speed,slope,residual"));
        assert!(lines.all(|l| l.split(',').count() == 7));
        let summary = json(&dir.path().join(format!("out/{cmd}_summary.json")));
        assert_eq!(summary["converged"], true);
        assert!(summary["lambda_hat"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn seed_flag_is_recorded_and_outputs_are_reproducible() {
    let config = "command = \"oracle\"\n[instance]\nkind = \"neumann1d\"\np = 3.0\nn = 10\n";
    let run = |seed: &str| {
        let dir = TempDir::new().unwrap();
        let out = nlrq(dir.path(), config, &["--seed", seed]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(dir.path().join("out/oracle.json")).unwrap()
    };
    let a = run("17");
    assert_eq!(a, run("17"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["seed"], 17);
}

#[test]
fn properties_on_default_suite_pass() {
    let dir = TempDir::new().unwrap();
    let out = nlrq(dir.path(), "command = \"properties\"\n", &[]);
    let report = std::fs::read_to_string(dir.path().join("out/properties.txt")).unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", report.lines().filter(|l| l.starts_with("not ok")).collect::<Vec<_>>().join("\n"));
    assert!(report.starts_with("TAP version 13\n"));
    assert!(!report.contains("not ok"));
}
