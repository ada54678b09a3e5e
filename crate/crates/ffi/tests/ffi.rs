use std::ffi::{CStr, CString};
use std::ptr;

use fblab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fblab_last_error()).to_string_lossy().into_owned() }
}

fn solve(n: u32) -> *mut FblabField {
    let mut f = ptr::null_mut();
    let s = unsafe { fblab_solve_disk(1.0, 1.0 / 24.0, n, 1, &mut f) };
    assert_eq!(s, FblabStatus::Ok, "{}", last_error());
    assert!(!f.is_null());
    f
}

#[test]
fn solve_query_and_free() {
    let f = solve(2);
    unsafe {
        let mut n = 0usize;
        assert_eq!(fblab_field_components(f, &mut n), FblabStatus::Ok);
        assert_eq!(n, 2);
        let (mut l0, mut l1, mut sum) = (0.0, 0.0, 0.0);
        assert_eq!(fblab_field_eigenvalue(f, 0, &mut l0), FblabStatus::Ok);
        assert_eq!(fblab_field_eigenvalue(f, 1, &mut l1), FblabStatus::Ok);
        assert_eq!(fblab_field_eigenvalue_sum(f, &mut sum), FblabStatus::Ok);
        assert!((l0 + l1 - sum).abs() < 1e-12);
        // two half disks: 2·j_{1,1}² ≈ 29.36 up to the coarse grid
        assert!((sum - 29.364).abs() < 0.03 * 29.364, "{sum}");
        let mut v = -1.0;
        assert_eq!(fblab_field_sample(f, 0, 2.0, 0.0, &mut v), FblabStatus::Ok);
        assert_eq!(v, 0.0);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(fblab_field_sample(f, 0, 0.3, 0.2, &mut a), FblabStatus::Ok);
        assert_eq!(fblab_field_sample(f, 1, 0.3, 0.2, &mut b), FblabStatus::Ok);
        assert!(a * b == 0.0 && a + b > 0.0);
        let mut lip = 0.0;
        assert_eq!(fblab_field_lipschitz(f, &mut lip), FblabStatus::Ok);
        assert!(lip > 0.0);
        assert_eq!(last_error(), "");
        fblab_field_free(f);
        fblab_field_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(fblab_solve_disk(-1.0, 0.05, 2, 1, &mut out), FblabStatus::InvalidArgument);
        assert!(out.is_null());
        assert!(last_error().contains("radius"), "{}", last_error());
        assert_eq!(fblab_solve_disk(1.0, 0.05, 2, 1, ptr::null_mut()), FblabStatus::NullPointer);
        let mut n = 0usize;
        assert_eq!(fblab_field_components(ptr::null(), &mut n), FblabStatus::NullPointer);
        assert!(last_error().contains("null"));
    }
    let f = solve(2);
    unsafe {
        let mut v = 0.0;
        assert_eq!(fblab_field_eigenvalue(f, 7, &mut v), FblabStatus::OutOfRange);
        assert_eq!(fblab_field_sample(f, 2, 0.0, 0.0, &mut v), FblabStatus::OutOfRange);
        assert_eq!(fblab_field_eigenvalue_sum(f, ptr::null_mut()), FblabStatus::NullPointer);
        // the coarse grid leaves no admissible radii for the frequency
        let (mut g, mut c) = (0.0, FblabPointClass::Unknown);
        assert_eq!(fblab_field_classify(f, 1.0, 0.0, &mut g, &mut c), FblabStatus::InvalidArgument);
        assert!(last_error().contains("8h"), "{}", last_error());
        fblab_field_free(f);
    }
}

#[test]
fn svg_and_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = solve(3);
    let svg = dir.path().join("p.svg");
    let cpath = CString::new(svg.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(fblab_field_write_svg(f, cpath.as_ptr()), FblabStatus::Ok, "{}", last_error());
        fblab_field_free(f);
    }
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<circle"));

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "solver.n = 2\nnonsense\n").unwrap();
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let mut passed = -1;
    unsafe {
        assert_eq!(fblab_run_config(c.as_ptr(), &mut passed), FblabStatus::Config);
        assert!(last_error().starts_with("line 2"), "{}", last_error());
        let missing = CString::new(dir.path().join("none.cfg").to_str().unwrap()).unwrap();
        assert_eq!(fblab_run_config(missing.as_ptr(), &mut passed), FblabStatus::Io);
    }
    std::fs::write(&cfg, "run.mode = constants\n").unwrap();
    unsafe {
        assert_eq!(fblab_run_config(c.as_ptr(), &mut passed), FblabStatus::Ok, "{}", last_error());
    }
    assert_eq!(passed, 1);
}

#[test]
fn constants_match_closed_forms() {
    let mut c = FblabConstants::default();
    unsafe {
        assert_eq!(fblab_constants(&mut c), FblabStatus::Ok);
    }
    let q2 = 2.0 / 3.0 + 3f64.sqrt() / (2.0 * std::f64::consts::PI);
    assert!((c.q2_squared - q2).abs() < 1e-4);
    assert!((c.delta2 - 0.0708).abs() < 1e-3);
    assert!(c.eps_bd > 0.0 && c.eps_int > 0.0);
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(fblab_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fblab.h")).unwrap();
    for name in [
        "typedef struct FblabField FblabField;",
        "FBLAB_STATUS_OK = 0",
        "fblab_solve_disk",
        "fblab_field_free",
        "fblab_last_error",
        "fblab_field_classify",
        "fblab_constants",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
