use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hmtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmtlab")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/green_n2_hardy_256.json")
}

/// Data rows of a CSV report, skipping the comment lines.
fn csv_rows(out: &Output) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(out.stdout.as_slice())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn green_zero_potential() {
    let out = hmtlab(&["green", "--n", "2", "--potential", "zero", "--grid-points", "512"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["format_version"], "hmtlab-report/1");
    assert_eq!(doc["config"]["potential"], "zero");
    assert!(doc["result"]["table"]["c_g"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn green_hardy_residual_within_tol() {
    let out = hmtlab(&["green", "--n", "3", "--potential", "hardy"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let tol = doc["config"]["tol"].as_f64().unwrap();
    assert!(doc["result"]["table"]["residual"].as_f64().unwrap() <= tol);
    assert!(doc["result"]["supersolution_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_configurations_exit_1() {
    for args in [
        &["green", "--n", "1"][..],
        &["search", "--mode", "lambda1", "--n", "5", "--beta", "7"],
        &["green", "--potential", "hardy+lambda=-1"],
        &["sweep", "--mode", "sideways"],
        &["green", "--mode", "boundedness"],
        &["verify", "--epsilon", "0.7"],
        &["green", "--no-such-flag"],
    ] {
        let out = hmtlab(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn golden_table_is_stable() {
    let text = std::fs::read_to_string(golden()).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    let out = hmtlab(&["green", "--n", "2", "--potential", "hardy", "--grid-points", "256"]);
    let fresh = json(&out);
    let (a, b) = (&doc["result"]["table"], &fresh["result"]["table"]);
    let rel = |x: &Value, y: &Value| (x.as_f64().unwrap() - y.as_f64().unwrap()).abs() / y.as_f64().unwrap().abs();
    assert!(rel(&a["c_g"], &b["c_g"]) < 1e-12);
    for (x, y) in a["G"].as_array().unwrap().iter().zip(b["G"].as_array().unwrap()) {
        assert!(rel(x, y) < 1e-12);
    }
}

#[test]
fn verify_default_corpus_passes() {
    let out = hmtlab(&["verify", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["result"]["reports"].as_array().unwrap().len(), 50);
    assert_eq!(doc["result"]["summary"]["pass"], true);
    assert_eq!(doc["config"]["seed"], 0);
}

#[test]
fn verify_zero_potential_is_identity() {
    let out = hmtlab(&["verify", "--potential", "zero", "--corpus-size", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let s = &json(&out)["result"]["summary"];
    for key in ["max_identity_grad_defect", "max_identity_hardy_defect", "max_mt_identity_defect"] {
        assert!(s[key].as_f64().unwrap() < 1e-8, "{key}");
    }
}

#[test]
fn verify_accepts_golden_and_rejects_corrupted_table() {
    let path = golden();
    let ok = hmtlab(&["verify", "--table", path.to_str().unwrap(), "--corpus-size", "5"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let g = &mut doc["result"]["table"]["G"][40];
    *g = Value::from(g.as_f64().unwrap() * 1.001);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out = hmtlab(&["verify", "--table", bad.to_str().unwrap(), "--corpus-size", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt"));

    std::fs::write(&bad, "{\"G\": [1, 2").unwrap();
    assert_eq!(hmtlab(&["verify", "--table", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn boundedness_sweep_csv_has_twenty_rows() {
    let out = hmtlab(&["sweep", "--mode", "boundedness", "--n", "2", "--beta", "0", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("# format_version: hmtlab-report/1\n# config: {"));
    assert!(text.contains("\nparam,value,overflow,divergence_flag\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 20);
    // 17 significant digits in scientific notation.
    let value = &rows[0][1];
    let mantissa = value.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{value}");
}

#[test]
fn divergence_probe_reports_both_truncations() {
    let out = hmtlab(&["sweep", "--mode", "divergence", "--n", "2", "--k-max", "8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 14);
    assert!(rows.iter().any(|r| &r[1] == "1") && rows.iter().any(|r| &r[1] == "2"));
}

#[test]
fn search_lambda1_is_positive() {
    let out = hmtlab(&["search", "--mode", "lambda1", "--n", "2", "--grid-points", "512", "--max-iter", "40"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["result"]["best_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"n": 3, "beta": 1.0, "grid_points": 512, "seed": 4}"#).unwrap();
    let out = hmtlab(&["rearrange-demo", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let c = &json(&out)["config"];
    assert_eq!((c["n"].as_u64(), c["seed"].as_u64(), c["grid_points"].as_u64()), (Some(3), Some(9), Some(512)));

    std::fs::write(&cfg, r#"{"dimension": 3}"#).unwrap();
    assert_eq!(hmtlab(&["green", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn out_path_receives_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let out = hmtlab(&["green", "--potential", "zero", "--grid-points", "64", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(doc["config"]["command"], "green");
}
