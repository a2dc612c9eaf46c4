use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn isosurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isosurf")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn analyze_equilateral_reports_isotropy() {
    let out = isosurf(&["analyze", "--chart", "equilateral-s5", "--grid", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["config"]["grid"], 64);
    assert!(f(&r["result"]["max_dev"]) < 1e-8);
    assert_eq!(r["result"]["isotropic"], true);
}

#[test]
fn analyze_nonminimal_is_rejected_with_trace() {
    let out = isosurf(&["analyze", "--chart", "perturbed-nonminimal", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "not_minimal");
    assert!(f(&r["error"]["detail"]["trace"]) > 0.1);
}

#[test]
fn coarse_grid_is_a_validation_error() {
    let out = isosurf(&["analyze", "--chart", "clifford-s3", "--grid", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "invalid_config");
}

#[test]
fn nonpositive_tolerance_is_a_validation_error() {
    let out = isosurf(&["analyze", "--chart", "clifford-s3", "--tol-rank", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flag_is_a_validation_error() {
    assert_eq!(isosurf(&["analyze", "--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn family_at_zero_reproduces_clifford() {
    let out = isosurf(&["family", "--chart", "clifford-s3", "--grid", "32", "--theta", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let m = &json(&out)["result"]["members"][0];
    assert!(f(&m["verification"]["congruence"]["rms_residual"]) < 1e-8);
}

#[test]
fn family_member_of_equilateral_is_isometric() {
    let out = isosurf(&["family", "--chart", "equilateral-s5", "--grid", "32", "--theta", "0.785"]);
    assert_eq!(out.status.code(), Some(0));
    let v = &json(&out)["result"]["members"][0]["verification"];
    assert!(f(&v["metric_deviation"]) < 1e-5);
    assert_eq!(v["congruence"]["congruent"], false);
}

#[test]
fn veronese_member_is_congruent() {
    let out = isosurf(&["congruence", "--chart", "veronese-s4", "--grid", "32", "--theta", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["congruence"]["congruent"], true);
    assert_eq!(r["result"]["against"]["family_theta"], 1.0);
}

#[test]
fn family_refuses_nonminimal_with_numerical_exit() {
    let out = isosurf(&["family", "--chart", "perturbed-nonminimal", "--grid", "16", "--theta", "0.7"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "compatibility");
}

#[test]
fn theta_outside_range_is_rejected() {
    let out = isosurf(&["family", "--chart", "clifford-s3", "--grid", "16", "--theta", "-0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn moduli_of_clifford_is_finite_with_curve() {
    let out = isosurf(&["moduli", "--chart", "clifford-s3", "--steps", "360"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert_eq!(r["classification"], "finite");
    let closing = r["closing"].as_array().unwrap();
    assert!(closing.iter().any(|c| f(&c["theta"]).min(std::f64::consts::PI - f(&c["theta"])) < 1e-6));
    assert_eq!(r["thetas"].as_array().unwrap().len(), 360);
    assert_eq!(r["max_distance"].as_array().unwrap().len(), 360);
}

#[test]
fn moduli_needs_periods() {
    let out = isosurf(&["moduli", "--chart", "holo-r4", "--steps", "16"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "precondition");
}

#[test]
fn check_holo_exercises_even_codimension() {
    let out = isosurf(&["check", "--chart", "holo-r4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = json(&out);
    let rows = r["result"]["reports"][0]["rows"].as_array().unwrap();
    assert!(rows.iter().any(|row| row["name"].as_str().unwrap().starts_with("even-codim-congruent")));
    assert!(rows.iter().all(|row| row["passed"] == true));
}

#[test]
fn check_all_passes() {
    let out = isosurf(&["check", "--all", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut labels = std::collections::BTreeSet::new();
    for rec in rd.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[5], "true", "{rec:?}");
        labels.insert(rec[0].to_string());
    }
    assert_eq!(labels.len(), isosurf_core::catalog::LABELS.len());
}

#[test]
fn check_unknown_label_fails() {
    let out = isosurf(&["check", "--chart", "no-such-chart"]);
    assert_ne!(out.status.code(), Some(0));
    assert_eq!(json(&out)["error"]["kind"], "unknown_label");
}

#[test]
fn reports_are_deterministic() {
    let args = ["analyze", "--chart", "veronese-s4", "--grid", "16"];
    let a = isosurf(&args);
    let b = isosurf(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let base = json(&isosurf(&["family", "--chart", "equilateral-s5", "--grid", "16", "--theta", "0.5"]));
    let one = json(&isosurf(&["family", "--chart", "equilateral-s5", "--grid", "16", "--theta", "0.5", "--jobs", "1"]));
    assert_eq!(base["result"], one["result"]);
    assert_eq!(one["config"]["jobs"], 1);
}

#[test]
fn out_directory_gets_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = isosurf(&["family", "--chart", "clifford-s3", "--grid", "16", "--theta", "0,0.5", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("clifford-s3.family.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["theta"], serde_json::json!([0.0, 0.5]));
    for name in ["summary", "theta-0", "theta-1"] {
        assert!(dir.path().join(format!("clifford-s3.family.{name}.csv")).exists(), "{name}");
    }
    let samples = fs::read_to_string(dir.path().join("clifford-s3.family.theta-1.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1 + 16 * 16);
    assert!(samples.starts_with("i,j,u,v,x0,x1,x2,x3\n"));
}

#[test]
fn analyze_csv_has_one_row_per_node() {
    let out = isosurf(&["analyze", "--chart", "holo-r4", "--grid", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("i,j,u,v,regular,substantial,ranks,trace,kappa_1,circularity_1\n"));
}

#[test]
fn catalog_definition_round_trips_through_chart_file() {
    let out = isosurf(&["catalog", "--chart", "equilateral-s5"]);
    let def = json(&out)["result"]["entries"][0]["definition"].clone();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chart.json");
    fs::write(&path, serde_json::to_string(&def).unwrap()).unwrap();
    let out = isosurf(&["congruence", "--chart", "equilateral-s5", "--other-file", path.to_str().unwrap(), "--grid", "16"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(f(&json(&out)["result"]["congruence"]["rms_residual"]) < 1e-14);
}

#[test]
fn broken_chart_file_reports_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{ \"label\": \"x\", ").unwrap();
    let out = isosurf(&["analyze", "--chart-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "chart_definition");
}

#[test]
fn polar_of_equilateral_is_conformal() {
    let out = isosurf(&["polar", "--chart", "equilateral-s5", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert!(f(&r["surface"]["max_conformality_dev"]) < 1e-6);
    assert!(f(&r["isotropy"]["max_dev"]) < 1e-6);
}

#[test]
fn polar_needs_an_odd_sphere() {
    let out = isosurf(&["polar", "--chart", "veronese-s4", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(1));
}
