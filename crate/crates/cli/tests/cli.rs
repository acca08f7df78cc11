use std::process::{Command, Output};

use serde_json::Value;

fn rys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rys-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> (Output, Value) {
    let out = rys(args);
    let v = serde_json::from_slice(&out.stdout).expect("report on stdout is json");
    (out, v)
}

#[test]
fn gaussian_verify_passes() {
    let (out, v) = report(&["verify", "--case", "gaussian", "--lambda", "2", "--points", "200", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["summary"]["failed"], 0);
    let names: Vec<&str> = v["records"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    for n in ["soliton-residual", "trace", "gradient-mu0", "laplacian-mu0", "splitting"] {
        assert!(names.contains(&n), "{n} missing");
    }
    for r in v["records"].as_array().unwrap() {
        assert!(!r["anchor"].as_str().unwrap().is_empty());
        let pass = r["gap"].as_f64().unwrap() <= r["tol"].as_f64().unwrap();
        assert_eq!(pass, r["verdict"] == "pass");
    }
}

#[test]
fn einstein_sphere_with_mu_passes() {
    let (out, v) = report(&[
        "verify", "--case", "einstein-s3", "--alpha", "1", "--beta", "0", "--mu", "1", "--lambda", "-2", "--points", "40",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(v["records"].as_array().unwrap().iter().any(|r| r["name"] == "laplacian"));
}

#[test]
fn unknown_case_exits_two_without_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = rys(&["verify", "--case", "nosuch", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
}

#[test]
fn failing_check_exits_one() {
    let out = rys(&["verify", "--case", "einstein-s3", "--lambda", "0.5", "--points", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn bad_tolerance_is_usage_error() {
    assert_eq!(rys(&["verify", "--case", "gaussian", "--tol", "bogus=1"]).status.code(), Some(2));
    assert_eq!(rys(&["verify", "--case", "gaussian", "--tol", "order2"]).status.code(), Some(2));
    assert_eq!(rys(&["verify", "--bogus-flag"]).status.code(), Some(2));
}

#[test]
fn integrate_reports_sphere_volume() {
    let (out, v) = report(&["integrate", "--case", "unit-s3", "--resolution", "24"]);
    assert_eq!(out.status.code(), Some(0));
    let vol = v["quantities"].as_array().unwrap().iter().find(|q| q["name"] == "volume").unwrap()["value"]
        .as_f64()
        .unwrap();
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    assert!((vol - exact).abs() / exact < 1e-5, "{vol}");
}

#[test]
fn integrate_rejects_open_case() {
    assert_eq!(rys(&["integrate", "--case", "h3"]).status.code(), Some(2));
}

#[test]
fn solve_recovers_gaussian_profile() {
    let out = rys(&["solve", "--background", "flat", "--lambda", "2", "--grid", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,f,residual"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (c[0], c[1])
        })
        .collect();
    assert_eq!(rows.len(), 128);
    let c = rows[0].1 + rows[0].0 * rows[0].0;
    let err = rows.iter().map(|(r, f)| (f - (c - r * r)).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn solve_constant_ansatz_fails() {
    assert_eq!(rys(&["solve", "--lambda", "2", "--ansatz", "constant"]).status.code(), Some(1));
}

#[test]
fn catalog_lists_stable_names() {
    let out = rys(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    for n in ["gaussian", "unit-s3", "h3", "s2xr", "perturbed-flat"] {
        assert!(names.contains(&n), "{n}");
    }
}

#[test]
fn report_file_is_written_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = rys(&["verify", "--case", "unit-s3", "--case", "s2xr", "--points", "20", "--resolution", "16", "-o", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn timing_adds_wall_time() {
    let (_, v) = report(&["verify", "--case", "gaussian", "--points", "5", "--timing"]);
    assert!(v["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    let (_, v) = report(&["verify", "--case", "gaussian", "--points", "5"]);
    assert!(v.get("wall_time_seconds").is_none());
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_rys-lab"))
        .args(["verify", "--case", "gaussian", "--points", "5"])
        .env("RYS_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_rys-lab"))
        .args(["verify", "--case", "gaussian", "--points", "5"])
        .env("RYS_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
