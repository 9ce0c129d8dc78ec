use std::process::{Command, Output};

use serde_json::Value;

fn fusionwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fusionwalk"))
        .args(args)
        .env_remove("FUSIONWALK_THREADS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = fusionwalk(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn csv(args: &[&str]) -> Vec<Vec<String>> {
    let out = fusionwalk(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    csv::Reader::from_reader(out.stdout.as_slice())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn ring_dimensions() {
    let r = json(&["ring", "--kind", "su2", "--t", "2.5", "--max", "5"]);
    let dims: Vec<f64> = r["dims"].as_array().unwrap().iter().map(|d| d.as_f64().unwrap()).collect();
    let expect = [1.0, 2.5, 5.25, 10.625, 21.3125, 42.65625];
    for (d, e) in dims.iter().zip(expect) {
        assert!((d - e).abs() < 1e-12 * e, "{d} vs {e}");
    }
    let r = json(&["ring", "--kind", "so3", "--delta2", "4", "--max", "3"]);
    assert_eq!(r["dims"], serde_json::json!([1.0, 3.0, 5.0, 7.0]));
    assert_eq!(fusionwalk(&["ring", "--kind", "su2", "--t", "1.9"]).status.code(), Some(2));
}

#[test]
fn walk_two_steps() {
    let rows = csv(&["walk", "--ring", "su2:2.5", "--mu", "1:1.0", "--from", "1", "--n", "2", "--format", "csv"]);
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["1", "3"]);
    let p: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn green_matches_window() {
    let rows = csv(&[
        "green", "--ring", "su2q:0.5", "--mu", "1:1.0", "--x", "0", "--y", "0", "--window", "200", "--format", "csv",
    ]);
    let value: f64 = rows[0][2].parse().unwrap();
    let window: f64 = rows[0][5].parse().unwrap();
    assert!((window - 1.25).abs() < 1e-12);
    assert!((value - window).abs() < 1e-8);
}

#[test]
fn recurrent_group_walk_is_reported() {
    let r = json(&["green", "--ring", "group:z2", "--mu", "1:1.0", "--max-terms", "500"]);
    assert_eq!(r["status"], "non_convergent");
}

#[test]
fn boundary_and_martin() {
    let r = json(&["boundary", "--ring", "group:z3", "--mu", "uniform"]);
    assert_eq!(r["verdict"], "trivial");
    let rows = csv(&[
        "martin", "--ring", "su2:2.5", "--mu", "1:0.5,2:0.5", "--kernel", "paper", "--x", "0..=3", "--y", "0", "--format",
        "csv",
    ]);
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!((r[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn moneq_aut_normal_form() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let spec = dir.join("cli_c4.json");
    let block = r#"{"n":1,"F":{"re":[[0.25]]}}"#;
    std::fs::write(&spec, format!(r#"{{"blocks":[{block},{block},{block},{block}]}}"#)).unwrap();
    let r = json(&["moneq", "aut", "--spec", spec.to_str().unwrap(), "--verify-walk"]);
    assert_eq!(r["delta2"], 4.0);
    assert_eq!(r["partner"], "M2 diag(0.5, 0.5)");
    assert_eq!(r["coamenable"], true);
}

#[test]
fn selftest_passes() {
    let out = fusionwalk(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn scalar_f_is_invalid_input() {
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli_f1.json");
    std::fs::write(&path, r#"{"re":[[1]]}"#).unwrap();
    assert_eq!(fusionwalk(&["moneq", "ao", "--F", path.to_str().unwrap()]).status.code(), Some(2));
}
