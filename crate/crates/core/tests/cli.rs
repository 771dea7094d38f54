use std::path::Path;
use std::process::{Command, Output};

use critsense::runner::record::read_csv_path;
use critsense::runner::{read_csv, COLUMNS};

fn critsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critsense")).args(args).output().expect("spawn critsense")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
[grid]
values = [0.7, 0.75, 0.8, 0.85]

[cutoff]
initial = 24
max = 128
"#;

#[test]
fn validate_passes() {
    let out = critsense(&["validate"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().count() > 20);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "q.toml", SMALL);
    let csv = dir.path().join("q.csv");
    let out = critsense(&["quadrature", "--config", &config, "--output", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let records = read_csv_path(&csv).unwrap();
    assert_eq!(records.len(), 4);
    for (r, g) in records.iter().zip([0.7, 0.75, 0.8, 0.85]) {
        assert_eq!(r.g_or_lambda, g);
        assert!((r.ratio.unwrap() - 1.0).abs() < 0.01);
    }
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("fit inv_var ~ delta"), "{stderr}");
}

#[test]
fn json_and_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "q.toml", SMALL);
    let csv = critsense(&["quadrature", "--config", &config, "--workers", "2"]);
    let json = critsense(&["quadrature", "--config", &config, "--format", "json"]);
    assert!(csv.status.success() && json.status.success());
    let records = read_csv(csv.stdout.as_slice()).unwrap();
    let parsed: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let rows = parsed.as_array().unwrap();
    assert_eq!(rows.len(), records.len());
    for (row, r) in rows.iter().zip(&records) {
        let obj = row.as_object().unwrap();
        assert_eq!(obj.len(), COLUMNS.len());
        assert_eq!(obj["model"], r.model.as_str());
        assert_eq!(obj["g_or_lambda"].as_f64().unwrap(), r.g_or_lambda);
        assert_eq!(obj["inv_var"].as_f64().unwrap(), r.inv_var);
        assert_eq!(obj["chi"].as_f64().unwrap(), r.chi);
        assert_eq!(obj["cutoff"].as_u64().unwrap() as usize, r.cutoff);
        assert_eq!(obj["converged"].as_bool().unwrap(), r.converged);
        assert!(obj["eta"].is_null());
    }
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "q.toml", SMALL);
    let a = critsense(&["quadrature", "--config", &config, "--workers", "1"]);
    let b = critsense(&["quadrature", "--config", &config, "--workers", "3"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_grid = write_config(dir.path(), "bad.toml", "[grid]\nmin = 0.9\nmax = 0.7\nsteps = 4\n");
    let out = critsense(&["quadrature", "--config", &bad_grid]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let bad_type = write_config(dir.path(), "type.toml", "n = \"two\"\n");
    assert_eq!(critsense(&["quadrature", "--config", &bad_type]).status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    assert_eq!(critsense(&["quadrature", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unknown_keys_warn() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "w.toml", &format!("mystery = 1\n{SMALL}"));
    let out = critsense(&["quadrature", "--config", &config]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mystery"), "{stderr}");
}

#[test]
fn partial_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "p.toml", "[grid]\nvalues = [0.5, 1.2, 0.6]\n\n[cutoff]\ninitial = 16\nmax = 64\n");
    let out = critsense(&["quadrature", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    let records = read_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(records.len(), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("failed point 1"), "{stderr}");
}
