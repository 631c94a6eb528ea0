use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use bo_ffi::*;

fn message() -> String {
    unsafe { CStr::from_ptr(bo_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn grid(n: usize, length: f64) -> *mut BoGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { bo_grid_new(n, length, &mut g) }, BoStatus::Ok);
    g
}

fn field(g: *const BoGrid, f: impl Fn(f64) -> f64) -> *mut BoField {
    let n = unsafe { bo_grid_points(g) };
    let length = 400.0;
    let dx = length / n as f64;
    let samples: Vec<f64> = (0..n).map(|j| f(-length / 2.0 + j as f64 * dx)).collect();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { bo_field_new(g, samples.as_ptr(), samples.len(), &mut out) },
        BoStatus::Ok
    );
    out
}

fn samples(f: *const BoField, n: usize) -> Vec<f64> {
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { bo_field_samples(f, buf.as_mut_ptr(), n) }, BoStatus::Ok);
    buf
}

#[test]
fn grid_validation_sets_error() {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { bo_grid_new(100, 10.0, &mut g) },
        BoStatus::InvalidArgument
    );
    assert!(g.is_null());
    assert!(message().contains("power of two"));
    assert_eq!(
        unsafe { bo_grid_new(64, 10.0, ptr::null_mut()) },
        BoStatus::NullPointer
    );
    assert_eq!(unsafe { bo_grid_points(ptr::null()) }, 0);
    unsafe { bo_grid_free(ptr::null_mut()) };
}

#[test]
fn operators_match_core() {
    let g = grid(1024, 400.0);
    let n = 1024;
    let u = field(g, |x| (-x * x / 8.0).exp() * (0.5 * x).sin());
    let mut hu = ptr::null_mut();
    let mut hhu = ptr::null_mut();
    unsafe {
        assert_eq!(bo_hilbert(u, &mut hu), BoStatus::Ok);
        assert_eq!(bo_hilbert(hu, &mut hhu), BoStatus::Ok);
    }
    let a = samples(u, n);
    let b = samples(hhu, n);
    let err = a.iter().zip(&b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    // the datum is odd, so its mean vanishes and H H = -I
    assert!(err < 1e-12, "{err}");

    let mut half = ptr::null_mut();
    let mut dd = ptr::null_mut();
    unsafe {
        assert_eq!(bo_frac_deriv(u, 0.5, &mut half), BoStatus::Ok);
        assert_eq!(bo_frac_deriv(half, 0.5, &mut dd), BoStatus::Ok);
        let mut bad = ptr::null_mut();
        assert_eq!(bo_frac_deriv(u, 3.0, &mut bad), BoStatus::InvalidArgument);
        assert!(bad.is_null());
    }
    let mut du = ptr::null_mut();
    let mut hdu = ptr::null_mut();
    unsafe {
        assert_eq!(bo_deriv(u, &mut du), BoStatus::Ok);
        assert_eq!(bo_hilbert(du, &mut hdu), BoStatus::Ok);
    }
    let x = samples(dd, n);
    let y = samples(hdu, n);
    let err = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");

    let mut small = [0.0; 4];
    assert_eq!(
        unsafe { bo_field_samples(u, small.as_mut_ptr(), 4) },
        BoStatus::BufferTooSmall
    );
    unsafe {
        for f in [u, hu, hhu, half, dd, du, hdu] {
            bo_field_free(f);
        }
        bo_grid_free(g);
    }
}

#[test]
fn trajectory_conserves_and_reports() {
    let g = grid(1024, 400.0);
    let u = field(g, |x| -2.0 / (1.0 + x * x));
    let mut before = BoInvariants::default();
    assert_eq!(unsafe { bo_invariants(u, &mut before) }, BoStatus::Ok);
    let mut tr = ptr::null_mut();
    unsafe {
        assert_eq!(
            bo_trajectory_new(u, 10.0, 1.0, true, &mut tr),
            BoStatus::InvalidArgument
        );
        assert!(message().contains("dt"));
        assert_eq!(bo_trajectory_new(u, 10.0, 1e-3, true, &mut tr), BoStatus::Ok);
        assert_eq!(bo_trajectory_advance(tr, 200), BoStatus::Ok);
    }
    let mut t = 0.0;
    assert_eq!(unsafe { bo_trajectory_time(tr, &mut t) }, BoStatus::Ok);
    assert!((t - 10.2).abs() < 1e-12);
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { bo_trajectory_field(tr, &mut v) }, BoStatus::Ok);
    let mut after = BoInvariants::default();
    assert_eq!(unsafe { bo_invariants(v, &mut after) }, BoStatus::Ok);
    assert!((after.i1 - before.i1).abs() < 1e-10);
    assert!((after.i2 - before.i2).abs() < 1e-8 * before.i2);

    let mut f_local = 0.0;
    assert_eq!(unsafe { bo_local_energy(v, 5.0, &mut f_local) }, BoStatus::Ok);
    assert!(f_local > 0.0);
    assert_eq!(
        unsafe { bo_local_energy(v, -1.0, &mut f_local) },
        BoStatus::InvalidArgument
    );
    unsafe {
        bo_field_free(v);
        bo_field_free(u);
        bo_trajectory_free(tr);
        bo_grid_free(g);
    }
}

#[test]
fn blow_up_reports_numerical_abort() {
    let g = grid(64, 400.0);
    let u = field(g, |x| 1e300 * (-x * x / 1e4).exp());
    let mut tr = ptr::null_mut();
    unsafe {
        assert_eq!(bo_trajectory_new(u, 0.0, 1e-3, true, &mut tr), BoStatus::Ok);
        assert_eq!(bo_trajectory_advance(tr, 10), BoStatus::NumericalAbort);
        let mut t = -1.0;
        assert_eq!(bo_trajectory_time(tr, &mut t), BoStatus::Ok);
        assert_eq!(t, 0.0);
        bo_trajectory_free(tr);
        bo_field_free(u);
        bo_grid_free(g);
    }
}

#[test]
fn mismatched_length_and_nulls() {
    let g = grid(64, 400.0);
    let data = [1.0; 10];
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(
            bo_field_new(g, data.as_ptr(), 10, &mut f),
            BoStatus::InvalidArgument
        );
        assert_eq!(bo_field_new(g, ptr::null(), 64, &mut f), BoStatus::NullPointer);
        assert_eq!(bo_hilbert(ptr::null(), &mut f), BoStatus::NullPointer);
        assert!(f.is_null());
        bo_grid_free(g);
    }
}

#[test]
fn profile_residuals() {
    let g = grid(4096, 400.0);
    let mut certified = 0.0;
    let mut classical = 0.0;
    unsafe {
        assert_eq!(
            bo_profile_residual(g, -2.0, 1.0, 0.0, -1.0, &mut certified),
            BoStatus::Ok
        );
        assert_eq!(
            bo_profile_residual(g, 4.0, 1.0, 0.0, 1.0, &mut classical),
            BoStatus::Ok
        );
        bo_grid_free(g);
    }
    assert!(certified < 1e-3, "{certified}");
    assert!(classical > 0.5, "{classical}");
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bo_ffi.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "typedef struct BoGrid BoGrid;",
        "typedef struct BoField BoField;",
        "typedef struct BoTrajectory BoTrajectory;",
        "bo_grid_new",
        "bo_trajectory_advance",
        "bo_last_error_message",
        "BoInvariants",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(status.success());
}
