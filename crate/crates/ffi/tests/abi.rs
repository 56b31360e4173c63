use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use kslab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        kslab_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn periodic(n: usize) -> *mut KslabGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { kslab_grid_periodic(1, std::f64::consts::TAU, n, &mut g) }, KslabStatus::Ok);
    g
}

#[test]
fn field_round_trip_and_norm() {
    let g = periodic(64);
    let values: Vec<f64> = (0..64).map(|i| (i as f64 * std::f64::consts::TAU / 64.0).sin()).collect();
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(kslab_field_new(g, values.as_ptr(), values.len(), &mut f), KslabStatus::Ok);
        let mut back = vec![0.0; 64];
        assert_eq!(kslab_field_values(f, back.as_mut_ptr(), back.len()), KslabStatus::Ok);
        assert_eq!(back, values);
        let mut l2 = 0.0;
        assert_eq!(kslab_field_norm(f, 2.0, &mut l2), KslabStatus::Ok);
        assert!((l2 - std::f64::consts::PI.sqrt()).abs() <= 1e-12);
        let mut short = [0.0; 8];
        assert_eq!(kslab_field_values(f, short.as_mut_ptr(), short.len()), KslabStatus::BufferTooSmall);
        kslab_field_free(f);
        kslab_grid_free(g);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(kslab_grid_periodic(1, 1.0, 7, &mut g), KslabStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(kslab_grid_len(ptr::null(), ptr::null_mut()), KslabStatus::NullPointer);
        let mut out = 0.0;
        assert_eq!(kslab_t_infinity(KslabCase::Zero, 0.0, 1.0, -1.0, &mut out), KslabStatus::InvalidArgument);
        assert_eq!(kslab_kernel_decay(2, 5.0, 256, &mut out, &mut out), KslabStatus::Numerical);
        let cfg = CString::new("model.p = 0.5\nrun.action = volterra").unwrap();
        let dir = CString::new("/nonexistent").unwrap();
        let mut code = -1;
        assert_eq!(kslab_run_config(cfg.as_ptr(), dir.as_ptr(), &mut code), KslabStatus::Config);
        assert!(last_error().contains("p must exceed 1"));
    }
}

#[test]
fn blow_up_is_an_outcome() {
    let g = periodic(256);
    let values: Vec<f64> = (0..256).map(|i| 10.0 * (i as f64 * std::f64::consts::TAU / 256.0).sin()).collect();
    let family = CString::new("cahn_hilliard").unwrap();
    unsafe {
        let (mut f, mut m, mut t) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(kslab_field_new(g, values.as_ptr(), values.len(), &mut f), KslabStatus::Ok);
        assert_eq!(kslab_model_new(family.as_ptr(), 2, 3.0, 1, &mut m), KslabStatus::Ok);
        assert_eq!(kslab_integrate(m, f, 1e-8, 1e-2, 1e3, &mut t), KslabStatus::Ok, "{}", last_error());
        let (mut tag, mut lo, mut hi) = (KslabOutcome::Completed, 0.0, 0.0);
        assert_eq!(kslab_trajectory_outcome(t, &mut tag, &mut lo, &mut hi), KslabStatus::Ok);
        assert_eq!(tag, KslabOutcome::BlowUp);
        assert!(lo < hi && hi - lo <= 1e-8 * (1.0 + 1e-9));
        let mut n = 0;
        kslab_trajectory_len(t, &mut n);
        let mut sup = vec![0.0; n];
        let name = CString::new("sup_norm").unwrap();
        assert_eq!(kslab_trajectory_series(t, name.as_ptr(), sup.as_mut_ptr(), n), KslabStatus::Ok);
        assert!(sup[n - 1] > 1e3);
        let mut last = ptr::null_mut();
        assert_eq!(kslab_trajectory_final(t, &mut last), KslabStatus::Ok);
        kslab_field_free(last);
        kslab_trajectory_free(t);
        kslab_model_free(m);
        kslab_field_free(f);
        kslab_grid_free(g);
    }
}

#[test]
fn scalar_helpers() {
    let mut p0 = 0.0;
    assert_eq!(unsafe { kslab_critical_exponent(2, 1, &mut p0) }, KslabStatus::Ok);
    assert_eq!(p0, 7.0);
    let (mut mass, mut alpha) = (0.0, 0.0);
    assert_eq!(unsafe { kslab_kernel_decay(1, 40.0, 2048, &mut mass, &mut alpha) }, KslabStatus::Ok);
    assert!((mass - 1.0).abs() <= 1e-8 && (alpha - 2.0).abs() <= 0.02);
    let v = unsafe { CStr::from_ptr(kslab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn run_config_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new("run.action = certify\ncertify.case = zero\ncertify.kappa = 2\ncertify.j0 = 1\n").unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut code = -1;
    assert_eq!(unsafe { kslab_run_config(cfg.as_ptr(), out.as_ptr(), &mut code) }, KslabStatus::Ok, "{}", last_error());
    assert_eq!(code, 0);
    assert!(dir.path().join("report.json").exists());
}

/// Compiles the C smoke program against the generated header and the static
/// library, when a C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libkslab_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains(" ok"));
}
