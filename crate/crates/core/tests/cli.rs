use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rylab_core::cli::{parse_config, Document, RunConfig};
use rylab_core::discrepancy::LEDGER_IDS;
use serde_json::Value;

fn rylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rylab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let text = format!("{body}\n[output]\ndir = {}\nprefix = {name}\n", dir.display());
    let path = dir.join(format!("{name}.conf"));
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

const VERIFY: &str = "command = verify
[flow]
kind = cigar
[params]
alpha = 0.5
beta = 0.5
[eval]
times = 0.1
points = 0.2 -0.1; 0.4 0.3
tol = 1e-5
[diff]
order = 4
richardson = false
";

#[test]
fn verify_on_steady_cigar_passes_with_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v", VERIFY);
    let out = rylab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path(), "v");
    assert_eq!(r["complete"], true);
    let verdicts = r["verdicts"].as_array().unwrap();
    assert!(verdicts.iter().all(|v| v["passed"] == true), "{verdicts:?}");
    assert!(r["residuals"].as_array().unwrap().len() >= 8);
    let ids: Vec<&str> = r["discrepancies"].as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    for id in LEDGER_IDS {
        assert!(ids.contains(&id), "{id}");
    }
    for d in r["discrepancies"].as_array().unwrap() {
        assert!(d["printed"].is_number() && d["engine"].is_number() && d["relative_gap"].is_number());
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d", VERIFY);
    assert_eq!(rylab(&["run", &cfg]).status.code(), Some(0));
    let first = fs::read(dir.path().join("d.json")).unwrap();
    assert_eq!(rylab(&["run", &cfg]).status.code(), Some(0));
    assert_eq!(first, fs::read(dir.path().join("d.json")).unwrap());
}

#[test]
fn tight_tolerance_is_a_verdict_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v", VERIFY);
    let out = rylab(&["run", &cfg, "--set", "eval.tol=1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path(), "v");
    assert!(r["verdicts"].as_array().unwrap().iter().any(|v| v["passed"] == false && v["hard"] == true));
}

#[test]
fn classify_reports_shrinking_cigar() {
    let dir = tempfile::tempdir().unwrap();
    let body = "command = classify\n[flow]\nkind = cigar\npotential = exp 2\n[params]\nalpha = 0.3\nbeta = 0.1\n[eval]\ntimes = 0, 1\npoints = 0 0; 0.5 -0.5\ntol = 1e-8\n";
    let cfg = write_config(dir.path(), "c", body);
    assert_eq!(rylab(&["run", &cfg]).status.code(), Some(0));
    let r = report(dir.path(), "c");
    assert_eq!(r["data"]["trend"], "Shrinking");
    let ratio = r["discrepancies"][0]["ratio"].as_f64().unwrap();
    assert!((1.0 / ratio - 2.0).abs() < 1e-6, "{ratio}");
}

#[test]
fn curvature_and_ry_eval_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let body = "command = ry-eval\n[flow]\nkind = poincare\nn = 2\n[params]\nalpha = 1\nbeta = 0\n[eval]\nt = 0.5\npoints = 0.2 1.5; 0.1 0.7\n";
    let cfg = write_config(dir.path(), "ry", body);
    assert_eq!(rylab(&["run", &cfg]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("ry.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "x1", "x2", "ry11", "ry12", "ry22", "max_abs", "closed_gap", "signature"]);
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let gap: f64 = rows[0][7].parse().unwrap();
    assert!(gap < 1e-6, "{gap}");

    let body = "command = curvature\n[flow]\nkind = conformal\npotential = exp 1\nbase = sphere 2\n[eval]\nt = 0\npoint = 0.3, -0.2\n";
    let cfg = write_config(dir.path(), "k", body);
    assert_eq!(rylab(&["run", &cfg]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("k.csv")).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    let (engine, closed): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
    assert!((engine - closed).abs() < 1e-6 && (closed - 2.0).abs() < 1e-9, "{engine} {closed}");
}

const RUN: &str = "command = flow-run
[params]
alpha = 1
beta = 0
[grid]
initial = cigar
shape = 21, 21
bc = dirichlet-exact
[solver]
dt = 1e-3
steps = 20
snapshot_every = 10
[probes]
points = 0 0 0; 0.02 0.5 0.5
";

#[test]
fn flow_run_writes_snapshots_and_probes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", RUN);
    let out = rylab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..3 {
        assert!(dir.path().join(format!("run_{i:04}.csv")).exists());
    }
    let snap = rylab_core::pde::read_snapshot_csv(fs::File::open(dir.path().join("run_0002.csv")).unwrap()).unwrap();
    assert!((snap.t - 0.02).abs() < 1e-12);
    let mut reader = csv::Reader::from_path(dir.path().join("run_probes.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "coord1", "coord2", "h", "K", "vol_rate"]);
    assert_eq!(reader.records().count(), 2);
    let r = report(dir.path(), "run");
    assert!(r["data"]["max_error_vs_exact"].as_f64().unwrap() < 1e-2);
}

#[test]
fn cfl_violation_is_refused_with_a_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", RUN);
    let out = rylab(&["run", &cfg, "--set", "solver.dt=0.05"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("suggested dt"));
    let r = report(dir.path(), "run");
    assert_eq!(r["complete"], false);
    let suggested = r["data"]["suggested_dt"].as_f64().unwrap();
    assert!(suggested > 0.0 && suggested < r["data"]["max_stable_dt"].as_f64().unwrap());
}

#[test]
fn unstable_run_aborts_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", RUN);
    let out = rylab(&[
        "run", &cfg,
        "--set", "grid.initial=waves 1",
        "--set", "grid.bc=periodic",
        "--set", "solver.dt=0.01",
        "--set", "solver.cfl_guard=false",
        "--set", "solver.scheme=explicit-euler",
        "--set", "solver.steps=2000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(dir.path(), "run");
    assert_eq!(r["complete"], false);
    assert!(r["abort"]["last_valid_t"].is_number());
}

#[test]
fn config_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    fs::write(&path, "command = flow-run\n[solver]\ndt = -1\n").unwrap();
    let out = rylab(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("solver.dt"), "{err}");

    fs::write(&path, "command = verify\n[flow]\nkind = cigar\nspeed = 2\n").unwrap();
    let out = rylab(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = rylab(&["run", path.to_str().unwrap(), "--set", "flow.nothing=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn residuals_command_checks_exact_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let body = "command = residuals\n[eval]\ntimes = 0, 0.05\npoints = 1.1 0.6; 0.8 -0.4\ntol = 1e-6\n[diff]\nstep = 1e-3\norder = 4\nrichardson = false\n";
    let cfg = write_config(dir.path(), "res", body);
    assert_eq!(rylab(&["run", &cfg]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("res.csv")).unwrap();
    for row in reader.records() {
        let row = row.unwrap();
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        let (t, x, y) = (v[0], v[1], v[2]);
        let expected = 2.0 * x * x / ((4.0 * t).exp() + x * x + y * y);
        assert!((v[5] - expected).abs() < 1e-6, "{} vs {expected}", v[5]);
        assert!((v[3] + expected).abs() < 1e-6);
    }
}

#[test]
fn render_output_parses_back_to_the_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", RUN);
    let out = rylab(&["render", &cfg, "--set", "solver.scheme=semi-implicit"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let reparsed = parse_config(&text).unwrap();
    let mut doc = Document::parse(&fs::read_to_string(&cfg).unwrap()).unwrap();
    doc.apply_override("solver.scheme=semi-implicit").unwrap();
    assert_eq!(reparsed, RunConfig::from_document(&doc).unwrap());
    assert_eq!(reparsed.render(), text);
}
