use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use krausft::io::to_json;
use krausft::maps::{KrausMap, MapFile};
use krausft::models::thermal_qubit_map;
use krausft::Tolerances;
use serde_json::{json, Value};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krausft"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gad_file(dir: &TempDir) -> PathBuf {
    let map = thermal_qubit_map(2f64.ln(), 0.3, &Tolerances::default()).unwrap();
    write(dir, "gad.json", &to_json(&MapFile::from_map(&map)))
}

fn real(rows: &[&[f64]]) -> Value {
    json!(rows
        .iter()
        .map(|r| r.iter().map(|&x| [x, 0.0]).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn measurement_file(dir: &TempDir) -> PathBuf {
    let map = json!({
        "dim": 2,
        "operators": [real(&[&[1.0, 0.0], &[0.0, 0.0]]), real(&[&[0.0, 0.0], &[0.0, 1.0]])],
    });
    write(dir, "measure.json", &map.to_string())
}

fn stationary_gad_process(dir: &TempDir, repeat: usize) -> PathBuf {
    let p = 2.0 / 3.0;
    let process = json!({
        "boundary": { "mode": "entropic", "initial_state": real(&[&[p, 0.0], &[0.0, 1.0 - p]]) },
        "steps": [{ "model": "thermal_qubit", "beta_omega": 2f64.ln(), "gamma": 0.4, "repeat": repeat }],
        "seed": 11,
        "samples": 4000,
    });
    write(dir, "stationary.json", &process.to_string())
}

fn unital_process(dir: &TempDir) -> PathBuf {
    let h = 0.5f64.sqrt();
    let process = json!({
        "boundary": { "mode": "entropic", "initial_state": real(&[&[0.9, 0.0], &[0.0, 0.1]]) },
        "steps": [
            { "model": "unitary", "matrix": real(&[&[h, h], &[h, -h]]) },
            { "model": "projective_measurement", "dim": 2 },
        ],
    });
    write(dir, "unital.json", &process.to_string())
}

#[test]
fn validate_accepts_gad_map() {
    let dir = TempDir::new().unwrap();
    let out = run(&["validate", s(&gad_file(&dir))]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["command"], "validate");
    assert_eq!(v["schema_version"], 1);
    assert!(v["tolerances"].is_object());
}

#[test]
fn validate_rejects_trace_decreasing_map() {
    let dir = TempDir::new().unwrap();
    let map = json!({ "dim": 2, "operators": [real(&[&[0.5, 0.0], &[0.0, 0.5]])] });
    let path = write(&dir, "lossy.json", &map.to_string());
    let out = run(&["validate", s(&path)]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert!(v["tp_deviation"].as_f64().unwrap() > 0.5);
}

#[test]
fn malformed_json_exits_with_parse_code() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.json", "{\n  \"dim\": 2,\n  \"operators\": [[\n");
    let out = run(&["validate", s(&path)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn missing_file_exits_with_parse_code() {
    let out = run(&["validate", "/nonexistent/map.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn classify_reports_gad_potential_changes() {
    let dir = TempDir::new().unwrap();
    let out = run(&["classify", s(&gad_file(&dir))]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let ln2 = 2f64.ln();
    let expected = [0.0, -ln2, 0.0, ln2];
    let ops = v["operators"].as_array().unwrap();
    assert_eq!(ops.len(), 4);
    for (op, e) in ops.iter().zip(expected) {
        assert!((op["delta_phi"].as_f64().unwrap() - e).abs() < 1e-10, "{op}");
    }
    assert_eq!(v["pi_source"], "computed");
}

#[test]
fn classify_measurement_needs_supplied_state() {
    let dir = TempDir::new().unwrap();
    let map = measurement_file(&dir);
    let out = run(&["classify", s(&map)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--pi"));

    let pi = write(&dir, "pi.json", &real(&[&[0.5, 0.0], &[0.0, 0.5]]).to_string());
    let out = run(&["classify", s(&map), "--pi", s(&pi)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    for op in v["operators"].as_array().unwrap() {
        assert_eq!(op["delta_phi"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn classify_rejects_mixed_operator() {
    let dir = TempDir::new().unwrap();
    let t = Tolerances::default();
    let ops = thermal_qubit_map(2f64.ln(), 0.3, &t).unwrap().operators().to_vec();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = (&ops[1] + &ops[3]).scale_real(r);
    let minus = (&ops[1] - &ops[3]).scale_real(r);
    let mixed = KrausMap::new(vec![ops[0].clone(), plus, ops[2].clone(), minus], &t).unwrap();
    let path = write(&dir, "mixed.json", &to_json(&MapFile::from_map(&mixed)));
    let out = run(&["classify", s(&path)]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert!(v["error"].as_str().unwrap().contains("operator 1"), "{v}");
}

#[test]
fn dual_writes_map_file_and_passes_balance() {
    let dir = TempDir::new().unwrap();
    let dual_path = dir.path().join("dual.json");
    let out = run(&["dual", s(&gad_file(&dir)), "--output", s(&dual_path)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["balance"]["passed"], true);
    let out = run(&["validate", s(&dual_path)]);
    assert_eq!(code(&out), 0);
}

#[test]
fn stationary_process_has_vanishing_entropy_production() {
    let dir = TempDir::new().unwrap();
    let out = run(&["verify", s(&stationary_gad_process(&dir, 3)), "--mode", "exact"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["max_abs_sigma"].as_f64().unwrap() < 1e-10);
    assert!(v["integral"]["deviation"].as_f64().unwrap() < 1e-12);
    assert!(v["detailed"]["max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn unital_mean_sigma_is_entropy_change() {
    let dir = TempDir::new().unwrap();
    let out = run(&["verify", s(&unital_process(&dir)), "--mode", "exact"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let mean = v["mean_sigma"].as_f64().unwrap();
    let ds = v["entropy_change"].as_f64().unwrap();
    assert!((mean - ds).abs() < 1e-12, "{mean} vs {ds}");
    assert!(ds > 0.1);
}

#[test]
fn monte_carlo_report_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let process = unital_process(&dir);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let ha = dir.path().join("a.csv");
    let hb = dir.path().join("b.csv");
    for (r, h) in [(&a, &ha), (&b, &hb)] {
        let out = run(&[
            "verify",
            s(&process),
            "--mode",
            "mc",
            "--seed",
            "5",
            "--samples",
            "3000",
            "--report",
            s(r),
            "--histogram",
            s(h),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&ha).unwrap(), fs::read(&hb).unwrap());
    let v: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["samples"], 3000);
}

#[test]
fn exact_mode_refuses_huge_enumeration() {
    let dir = TempDir::new().unwrap();
    let out = run(&["verify", s(&stationary_gad_process(&dir, 12)), "--mode", "exact"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mc"));
}

#[test]
fn histogram_csv_has_expected_columns() {
    let dir = TempDir::new().unwrap();
    let hist = dir.path().join("hist.csv");
    let out = run(&[
        "verify",
        s(&unital_process(&dir)),
        "--histogram",
        s(&hist),
        "--bin-width",
        "0.25",
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&hist).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bin_left,bin_right,probability"));
    let total: f64 = lines
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn sample_writes_trajectories() {
    let dir = TempDir::new().unwrap();
    let traj = dir.path().join("traj.json");
    let out = run(&[
        "sample",
        s(&stationary_gad_process(&dir, 2)),
        "--samples",
        "50",
        "--output",
        s(&traj),
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&fs::read(&traj).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 50);
    assert_eq!(stdout_json(&out)["seed"], 11);
}

#[test]
fn tolerance_override_is_echoed() {
    let dir = TempDir::new().unwrap();
    let mut tol = serde_json::to_value(Tolerances::default()).unwrap();
    tol["tp"] = json!(1e-6);
    let tol_path = write(&dir, "tol.json", &tol.to_string());
    let out = run(&["--tolerances", s(&tol_path), "validate", s(&gad_file(&dir))]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["tolerances"]["tp"].as_f64(), Some(1e-6));
}
