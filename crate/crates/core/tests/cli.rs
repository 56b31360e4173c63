//! End-to-end runs of the `kslab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslab"))
        .args(args)
        .output()
        .expect("spawn kslab")
}

fn report(dir: &Path) -> Value {
    let text = fs::read_to_string(dir.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn kernel_command_reports_the_decay_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kslab(&["kernel", "--m", "2", "--dim", "1", "--out", &out_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    let alpha = r["result"]["decay"]["alpha"].as_f64().unwrap();
    assert!((alpha - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0, "{alpha}");
    assert!(r["result"]["decay"]["amplitude"].as_f64().unwrap() > 0.0);
    assert!(r["result"]["decay"]["rate"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(tmp.path().join("kernel.csv")).unwrap();
    assert!(csv.starts_with("y,F"));
    assert_eq!(csv.lines().count(), 2049);
}

#[test]
fn certify_command_reports_the_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kslab(&[
        "certify", "--case", "strict", "--a", "1", "--kappa", "1", "--j0", "0", "--out", &out_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    let t_inf = r["result"]["t_infinity"].as_f64().unwrap();
    assert!((t_inf - std::f64::consts::FRAC_PI_2).abs() <= 1e-12);
    assert_eq!(r["result"]["diverges_before_bound"], Value::Bool(true));
    assert!(tmp.path().join("riccati.csv").exists());
}

#[test]
fn zero_run_completes_with_zero_monitors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kslab(&[
        "run",
        "--family",
        "mkse",
        "--set",
        "init.preset=zero",
        "--t-end",
        "0.05",
        "--dt",
        "1e-3",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(tmp.path())["result"]["outcome"]["kind"], "completed");
    let csv = fs::read_to_string(tmp.path().join("monitors.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,"));
    let mut rows = 0;
    for line in lines {
        rows += 1;
        assert!(line.split(',').skip(1).all(|x| x.parse::<f64>().unwrap() == 0.0), "{line}");
    }
    assert_eq!(rows, 51);
}

#[test]
fn manifest_lists_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kslab(&[
        "run",
        "--family",
        "mkse",
        "--t-end",
        "0.02",
        "--dt",
        "1e-3",
        "--set",
        "time.snapshot_every=10",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for name in ["config.txt", "report.json", "monitors.csv", "checkpoint.ksck"] {
        assert!(outputs.contains(&name), "{name} missing from {outputs:?}");
    }
    assert!(outputs.iter().any(|o| o.ends_with(".ksb")));
    for o in &outputs {
        assert!(tmp.path().join(o).exists(), "{o}");
    }
    let config = fs::read_to_string(tmp.path().join("config.txt")).unwrap();
    assert_eq!(manifest["config_digest"], kslab::io::digest(&config));
}

#[test]
fn identical_configs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = kslab(&[
            "run",
            "--family",
            "mkse",
            "--set",
            "init.preset=random",
            "--seed",
            "11",
            "--t-end",
            "0.05",
            "--dt",
            "1e-3",
            "--out",
            &out_arg(dir),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let read = |d: &Path| fs::read(d.join("monitors.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn resume_continues_the_run() {
    let full = tempfile::tempdir().unwrap();
    let half = tempfile::tempdir().unwrap();
    let rest = tempfile::tempdir().unwrap();
    let common = ["--family", "mkse", "--set", "init.preset=random", "--dt", "1e-3"];
    let run = |t_end: &str, dir: &Path, resume: Option<&Path>| {
        let mut args: Vec<String> = vec!["run".into()];
        args.extend(common.iter().map(|s| s.to_string()));
        args.extend(["--t-end".into(), t_end.into(), "--out".into(), out_arg(dir)]);
        if let Some(r) = resume {
            args.extend(["--resume".into(), r.join("checkpoint.ksck").display().to_string()]);
        }
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = kslab(&refs);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run("0.1", full.path(), None);
    run("0.05", half.path(), None);
    run("0.1", rest.path(), Some(half.path()));
    let a = kslab::io::Checkpoint::load(&full.path().join("checkpoint.ksck")).unwrap();
    let b = kslab::io::Checkpoint::load(&rest.path().join("checkpoint.ksck")).unwrap();
    assert_eq!(a.step, 100);
    assert_eq!(a, b);
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kslab"))
        .args([
            "sweep",
            "--set",
            "run.action=volterra",
            "--set",
            "sweep.model.p=1.5,2",
            "--set",
            "sweep.model.m=2,3",
            "--set",
            "volterra.steps=200",
            "--out",
            &out_arg(tmp.path()),
        ])
        .env("KSLAB_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..4 {
        assert!(tmp.path().join(format!("run_{i:03}")).join("volterra.csv").exists());
    }
    assert!(tmp.path().join("sweep.json").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kslab(&["volterra", "--p", "0.5", "--out", &out_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p must exceed 1"));
    let out = kslab(&["run", "--set", "no.such=1", "--out", &out_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_read() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("k.cfg");
    fs::write(&cfg, "# kernel for m = 1\nrun.action = kernel\nmodel.m = 1\nkernel.half_width = 40\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = kslab(&["kernel", "--config", &cfg.display().to_string(), "--out", &out_arg(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let alpha = report(&out_dir)["result"]["decay"]["alpha"].as_f64().unwrap();
    assert!((alpha - 2.0).abs() <= 0.02);
}

#[test]
fn blow_up_exits_with_ten() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kslab(&[
        "run",
        "--family",
        "cahn_hilliard",
        "--p",
        "3",
        "--set",
        "init.preset=sine",
        "--set",
        "init.amplitude=10",
        "--set",
        "grid.points=256",
        "--set",
        "time.threshold=1e3",
        "--dt",
        "1e-8",
        "--t-end",
        "1e-2",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(10), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(tmp.path())["result"]["outcome"]["kind"], "blow_up");
}

#[test]
fn check_runs_selected_criteria() {
    let out = kslab(&["check", "--only", "6,11"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2, "{text}");
}
