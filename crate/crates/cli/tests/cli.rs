use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boolform")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.extend(["--out", "json"]);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["schema"], "boolform/v1");
    v
}

#[test]
fn count_plain() {
    assert_eq!(stdout(&["count", "--model", "catalan", "--vars", "1", "--size", "2"]), "8\n");
    assert_eq!(stdout(&["count", "--model", "assoc-comm", "--vars", "2", "--size", "5"]), "6792\n");
}

#[test]
fn count_formats() {
    let csv = stdout(&["count", "--model", "comm", "--vars", "1", "--size", "4", "--upto", "--out", "csv"]);
    assert_eq!(csv, "m,count\n1,2\n2,6\n3,24\n4,138\n");
    let v = json(&["count", "--model", "catalan", "--vars", "2", "--size", "9"]);
    // beyond 2^32, and serialized as a string
    assert_eq!(v["counts"][0]["count"], "95965675520");
    assert_eq!(v["model"], "catalan");
}

#[test]
fn distribution_totals() {
    let v = json(&["distribution", "--model", "assoc", "--vars", "2", "--size", "3"]);
    assert_eq!(v["total"], "384");
    let sum: u64 = v["entries"].as_array().unwrap().iter().map(|e| e["count"].as_str().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(sum, 384);
    let dp = json(&["distribution", "--model", "assoc", "--vars", "2", "--size", "3", "--method", "dp"]);
    assert_eq!(v, dp);
}

#[test]
fn series_coefficients() {
    let v = json(&["series", "--model", "comm", "--vars", "1", "--kind", "st_x", "--order", "8"]);
    let c: Vec<&str> = v["coefficients"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(c, ["0", "0", "1", "4", "23", "138", "921", "6374"]);
}

#[test]
fn singularity_and_ratio() {
    let v = json(&["singularity", "--model", "catalan", "--vars", "4", "--precision", "128"]);
    let rho: f64 = v["rho"].as_str().unwrap().parse().unwrap();
    assert_eq!(rho, 1.0 / 64.0);
    assert_eq!(v["method"], "closed-form");
    let r: f64 = stdout(&["ratio", "--model", "catalan", "--vars", "200", "--kind", "g_x"]).trim().parse().unwrap();
    assert!((200.0 * r - 0.5).abs() < 0.01, "{r}");
}

#[test]
fn lemmas_pass() {
    let out = stdout(&["verify-lemmas", "--model", "comm", "--max-size", "5", "--vars", "2"]);
    assert_eq!(out.lines().skip(1).filter(|l| l.ends_with("PASS")).count(), 4, "{out}");
}

#[test]
fn complexity_reports() {
    let v = json(&["complexity", "--fn", "8", "--vars", "2", "--model", "catalan"]);
    let m = &v["models"][0];
    assert_eq!((m["L"].as_u64(), m["M"].as_u64()), (Some(2), Some(2)));
    assert_eq!(m["lambda_t"], 24);
    assert_eq!(m["estimate_within_bounds"], true);
    let v = json(&["complexity", "--fn", "n:1:1"]);
    assert_eq!(v["models"].as_array().unwrap().len(), 4);
}

#[test]
fn constants_table_single_model() {
    let v = json(&["constants-table", "--model", "catalan", "--precision", "192"]);
    let rows = v["rows"].as_array().unwrap();
    assert!((rows[0]["lambda"].as_f64().unwrap() - 0.75).abs() < 0.005);
    assert!((rows[1]["lambda"].as_f64().unwrap() - 0.3125).abs() < 0.005);
}

#[test]
fn output_is_deterministic() {
    let a = ["complexity", "--fn", "n:3:f8", "--model", "comm", "--out", "json"];
    assert_eq!(run(&a).stdout, run(&a).stdout);
}

#[test]
fn exit_codes() {
    let usage = run(&["count", "--model", "nope", "--size", "2"]);
    assert_eq!(usage.status.code(), Some(64));
    let bad_fn = run(&["complexity", "--fn", "zz", "--vars", "2"]);
    assert_eq!(bad_fn.status.code(), Some(64));
    let cap = run(&["distribution", "--model", "catalan", "--vars", "2", "--size", "9"]);
    assert_eq!(cap.status.code(), Some(75));
    let err: Value = serde_json::from_slice(&cap.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "resource");
    assert_eq!(err["schema"], "boolform/v1");
    let numeric = run(&["singularity", "--model", "comm", "--precision", "16"]);
    assert_eq!(numeric.status.code(), Some(64));
}
