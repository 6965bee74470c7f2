use serde_json::{json, Value};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loewner")).args(args).env("LOEWNER_THREADS", "1").output().unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn circle(n: usize, marks: &[usize]) -> Value {
    let pts: Vec<Value> = (0..n).map(|k| {
        let t = TAU * k as f64 / n as f64;
        json!([t.cos(), t.sin()])
    }).collect();
    json!({"closed": true, "points": pts, "marks": marks})
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn energy_of_circle_is_small() {
    let d = tempfile::tempdir().unwrap();
    let c = write(d.path(), "circle.json", &circle(200, &[0]));
    let o = run(&["energy", "--curve", s(&c), "--levels", "6", "--angular", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["liouville"]["value"].as_f64().unwrap() < 1e-3);
    assert!(v["rooted_driving"]["value"].as_f64().unwrap() < 1e-3);
}

#[test]
fn trace_of_zero_is_vertical_and_drives_back() {
    let d = tempfile::tempdir().unwrap();
    let w = write(d.path(), "zero.json", &json!({"times": [0.0, 1.0], "values": [0.0, 0.0]}));
    let out = d.path().join("trace.json");
    assert!(run(&["trace", "--driving", s(&w), "--steps-per-unit", "200", "--out", s(&out)]).status.success());
    let curve = read(&out);
    let pts = curve["points"].as_array().unwrap();
    assert!(pts.iter().all(|p| p[0].as_f64().unwrap().abs() < 1e-12));
    let tip = pts.last().unwrap()[1].as_f64().unwrap();
    assert!((tip - 2.0).abs() < 1e-9);
    let o = run(&["drive", "--curve", s(&out)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["values"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap().abs() < 1e-9));
}

#[test]
fn weld_is_deterministic_and_reports_pieces() {
    let d = tempfile::tempdir().unwrap();
    let c = write(d.path(), "circle.json", &circle(160, &[0, 40, 80, 120]));
    let (a, b) = (d.path().join("a.json"), d.path().join("b.json"));
    assert!(run(&["weld", "--curve", s(&c), "--out", s(&a)]).status.success());
    assert!(run(&["weld", "--curve", s(&c), "--out", s(&b)]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = read(&a);
    assert!(v["pieces"]["residuals"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap() < 1e-8));
    let o = run(&["ads-check", "--welding", s(&a)]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["positive"], json!(true));
    let svg = d.path().join("w.svg");
    assert!(run(&["plot", "--welding", s(&a), "--out", s(&svg)]).status.success());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn opt_curve_recovers_the_circle() {
    let d = tempfile::tempdir().unwrap();
    let pts = write(d.path(), "roots4.json", &json!({"points": [[1, 0], [0, 1], [-1, 0], [0, -1]]}));
    let corners = [(1.0, 0.0), (1.1, 0.9), (0.0, 1.0), (-0.9, 1.1), (-1.0, 0.0), (-1.1, -0.9), (0.0, -1.0), (0.9, -1.1)];
    let mut p = Vec::new();
    let mut marks = Vec::new();
    for k in 0..8 {
        if k % 2 == 0 {
            marks.push(p.len());
        }
        let (a, b) = (corners[k], corners[(k + 1) % 8]);
        for j in 0..20 {
            let t = j as f64 / 20.0;
            p.push(json!([a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t]));
        }
    }
    let init = write(d.path(), "square.json", &json!({"closed": true, "points": p, "marks": marks}));
    let out = d.path().join("out");
    let o = run(&["opt-curve", "--points", s(&pts), "--init", s(&init), "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let last: f64 = trace.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last < 1e-3, "{trace}");
    assert!(read(&out.join("report.json"))["converged"].as_bool().unwrap());
    let svg = d.path().join("c.svg");
    assert!(run(&["plot", "--curve", s(&out.join("curve.json")), "--out", s(&svg)]).status.success());
}

#[test]
fn opt_weld_then_pleat() {
    let d = tempfile::tempdir().unwrap();
    let q = std::f64::consts::PI / 2.0;
    let c = write(d.path(), "c.json", &json!({"x": [0.0, q, 2.0 * q, 3.0 * q], "y": [0.1, 1.9, 3.3, 4.9]}));
    let out = d.path().join("w");
    let o = run(&["opt-weld", "--constraints", s(&c), "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&out.join("report.json"));
    assert!(report["constraint_residual"].as_f64().unwrap() < 1e-2);
    let o = run(&["pleat", "--welding", s(&out.join("welding.json"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(p["ambient"], json!("AdS3"));
    assert_eq!(p["bending"].as_array().unwrap().len(), 5);
    let o = run(&["pleat", "--curve", s(&out.join("curve.json"))]);
    let p: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(p["ambient"], json!("H3"));
    assert_eq!(p["faces"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let bad = write(d.path(), "bad.json", &json!({"theta": [0.0, 2.0, 1.0, 4.0], "image": [0.0, 1.0, 2.0, 3.0]}));
    let o = run(&["ads-check", "--welding", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/theta/"));
    let garbage = d.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    assert_eq!(run(&["trace", "--driving", s(&garbage)]).status.code(), Some(2));
    let times = write(d.path(), "t.json", &json!({"times": [0.0, 1.0, 0.5], "values": [0.0, 0.0, 0.0]}));
    assert_eq!(run(&["trace", "--driving", s(&times)]).status.code(), Some(2));
    let pts = write(d.path(), "p.json", &json!([[1, 0], [0, 1], [-1, 0], [0, -1]]));
    let sq = write(d.path(), "sq.json", &json!({"closed": true, "points": [[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1]], "marks": [0, 2, 4, 6]}));
    let out = d.path().join("o");
    let o = run(&["opt-curve", "--points", s(&pts), "--init", s(&sq), "--tol", "1e-12", "--max-sweeps", "1", "--arc-samples", "10", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("curve.json").exists());
}
