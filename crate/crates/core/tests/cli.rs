use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = "scenario = gaussian
grid.n = 256
grid.length = 100
solver.dt = 1e-2
solver.t0 = 10
solver.t_end = 10.5
solver.record_every = 10
";

// reaches past t = 32 so the first dyadic block [16, 32) is complete
const LONG: &str = "scenario = gaussian
gaussian.width = 2
grid.n = 256
grid.length = 100
solver.dt = 1e-2
solver.t0 = 10
solver.t_end = 40
solver.record_every = 50
";

fn bo(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bo"));
    cmd.args(args).env_remove("BO_OUT_DIR");
    cmd
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn out_dir_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "small.cfg", SMALL);
    let target = tmp.path().join("from_env");
    let out = bo(&["run", "--config", cfg.to_str().unwrap()])
        .env("BO_OUT_DIR", &target)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["records.csv", "manifest.json", "F.dat"] {
        assert!(target.join("small").join(f).is_file(), "{f}");
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn parallel_jobs_match_sequential_runs() {
    let tmp = TempDir::new().unwrap();
    let a = write(tmp.path(), "a.cfg", SMALL);
    let b = write(
        tmp.path(),
        "b.cfg",
        &SMALL
            .replace("gaussian", "soliton")
            .replace("scenario = soliton\n", "scenario = soliton\nsoliton.c = 0.5\n"),
    );
    let seq = tmp.path().join("seq");
    let par = tmp.path().join("par");
    for (dir, jobs) in [(&seq, "1"), (&par, "2")] {
        let out = bo(&[
            "run",
            "--config",
            a.to_str().unwrap(),
            "--config",
            b.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--jobs",
            jobs,
        ])
        .output()
        .unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for stem in ["a", "b"] {
        let x = fs::read(seq.join(stem).join("records.csv")).unwrap();
        let y = fs::read(par.join(stem).join("records.csv")).unwrap();
        assert_eq!(x, y, "{stem}");
    }
}

#[test]
fn duplicate_stems_and_bad_configs_exit_2() {
    let tmp = TempDir::new().unwrap();
    let a = write(tmp.path(), "one/x.cfg", SMALL);
    let b = write(tmp.path(), "two/x.cfg", SMALL);
    let out = bo(&[
        "run",
        "--config",
        a.to_str().unwrap(),
        "--config",
        b.to_str().unwrap(),
    ])
    .current_dir(tmp.path())
    .output()
    .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("distinct"));

    let bad = write(tmp.path(), "bad.cfg", "grid.n = 100\n");
    let out = bo(&["run", "--config", bad.to_str().unwrap()])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn analyze_prints_and_writes_the_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "long.cfg", LONG);
    let out_dir = tmp.path().join("out");
    let out = bo(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ])
    .output()
    .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let records = out_dir.join("long").join("records.csv");
    let out = bo(&[
        "analyze",
        "--records",
        records.to_str().unwrap(),
        "--a",
        "0",
        "--c",
        "1",
    ])
    .output()
    .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["integrated_decay"].as_f64().unwrap() > 0.0);
    assert!(v["lambda_mismatch"].as_f64().unwrap() < 1e-12);
    assert!(!v["dyadic_minima"].as_array().unwrap().is_empty());
    let written: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("long").join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(written, v);
}

#[test]
fn analyze_rejects_missing_and_malformed_records() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = bo(&["analyze", "--records", missing.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);

    let junk = write(tmp.path(), "junk.csv", "t,I1\n1,2\n");
    let out = bo(&["analyze", "--records", junk.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    let cfg = write(tmp.path(), "short.cfg", SMALL);
    let out_dir = tmp.path().join("out");
    bo(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ])
    .output()
    .unwrap();
    let records = out_dir.join("short").join("records.csv");
    let out = bo(&["analyze", "--records", records.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "too short a series");
}

#[test]
fn soliton_test_reports_both_profiles() {
    let out = bo(&[
        "soliton-test",
        "--c",
        "1",
        "--validate-family",
        "--grid-n",
        "2048",
        "--grid-length",
        "400",
    ])
    .output()
    .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let certified = v["certified"]["residual"].as_f64().unwrap();
    let classical = v["classical"]["residual"].as_f64().unwrap();
    assert!(certified < 1e-2, "{certified}");
    assert!(classical > 1.0, "{classical}");
    assert!(v["family"].as_array().is_some_and(|f| !f.is_empty()));

    let out = bo(&["soliton-test", "--c", "-1"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn check_lemmas_rejects_bad_lambdas() {
    let tmp = TempDir::new().unwrap();
    let out = bo(&[
        "check-lemmas",
        "--lambdas",
        "1,-5",
        "--out",
        tmp.path().to_str().unwrap(),
    ])
    .output()
    .unwrap();
    assert_eq!(code(&out), 2);
}
