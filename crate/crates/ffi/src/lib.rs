//! C ABI over `bo-core`.
//!
//! Objects are opaque handles created by `*_new` functions and released
//! with the matching `*_free`. Every fallible call returns a [`BoStatus`];
//! on failure `bo_last_error_message` describes the most recent error on
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use bo_core::soliton::{profile_residual, SolitonParams};
use bo_core::solver::{invariants, Stepper, TrajectoryState};
use bo_core::spectral::{deriv, frac_deriv, hilbert};
use bo_core::virial::local_energy;
use bo_core::{Error, Field, Grid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    NumericalAbort = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Conserved quantities of a field.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoInvariants {
    pub i1: f64,
    pub i2: f64,
    pub energy: f64,
    pub l1: f64,
}

pub struct BoGrid(Arc<Grid>);

pub struct BoField(Field);

pub struct BoTrajectory {
    stepper: Stepper,
    state: TrajectoryState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(BoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::GridMismatch => BoStatus::GridMismatch,
            Error::NonFinite { .. } => BoStatus::NumericalAbort,
            _ => BoStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BoStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> BoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BoStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside bo_ffi");
            BoStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_grid_new(n: usize, length: f64, out: *mut *mut BoGrid) -> BoStatus {
    guard(|| put(out, BoGrid(Grid::new(n, length)?)))
}

/// # Safety
/// `grid` must come from `bo_grid_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bo_grid_free(grid: *mut BoGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bo_grid_points(grid: *const BoGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n())
}

/// Copies `len` samples into a new field on `grid`.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn bo_field_new(
    grid: *const BoGrid,
    samples: *const f64,
    len: usize,
    out: *mut *mut BoField,
) -> BoStatus {
    guard(|| {
        let g = as_ref(grid, "grid")?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let data = std::slice::from_raw_parts(samples, len).to_vec();
        put(out, BoField(Field::new(&g.0, data)?))
    })
}

/// # Safety
/// `field` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bo_field_free(field: *mut BoField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copies the samples into `buf`, which must hold at least the grid size.
///
/// # Safety
/// `buf` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bo_field_samples(field: *const BoField, buf: *mut f64, cap: usize) -> BoStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let s = f.0.samples();
        if cap < s.len() {
            return Err(Failure(
                BoStatus::BufferTooSmall,
                format!("buffer holds {cap} values, field has {}", s.len()),
            ));
        }
        ptr::copy_nonoverlapping(s.as_ptr(), buf, s.len());
        Ok(())
    })
}

unsafe fn unary(
    field: *const BoField,
    out: *mut *mut BoField,
    op: impl FnOnce(&Field) -> Result<Field, Error>,
) -> BoStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        put(out, BoField(op(&f.0)?))
    })
}

/// Hilbert transform, symbol `-i sgn(xi)`.
///
/// # Safety
/// `field` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_hilbert(field: *const BoField, out: *mut *mut BoField) -> BoStatus {
    unary(field, out, |f| Ok(hilbert(f)))
}

/// Spectral derivative.
///
/// # Safety
/// As for `bo_hilbert`.
#[no_mangle]
pub unsafe extern "C" fn bo_deriv(field: *const BoField, out: *mut *mut BoField) -> BoStatus {
    unary(field, out, |f| Ok(deriv(f)))
}

/// `D^s`, symbol `|xi|^s`, for `s` in `[0, 2]`.
///
/// # Safety
/// As for `bo_hilbert`.
#[no_mangle]
pub unsafe extern "C" fn bo_frac_deriv(field: *const BoField, s: f64, out: *mut *mut BoField) -> BoStatus {
    unary(field, out, |f| frac_deriv(f, s))
}

/// # Safety
/// `field` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_invariants(field: *const BoField, out: *mut BoInvariants) -> BoStatus {
    guard(|| {
        let inv = invariants(&as_ref(field, "field")?.0);
        write(
            out,
            BoInvariants {
                i1: inv.i1,
                i2: inv.i2,
                energy: inv.energy,
                l1: inv.l1,
            },
        )
    })
}

/// `integral phi'(x/lambda) (u^2 + (D^{1/2}u)^2)`.
///
/// # Safety
/// `field` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_local_energy(field: *const BoField, lambda: f64, out: *mut f64) -> BoStatus {
    guard(|| write(out, local_energy(&as_ref(field, "field")?.0, lambda)?))
}

/// Starts a trajectory at `(field, t0)`; `dt` must satisfy
/// `0 < dt <= 1/max|xi|`.
///
/// # Safety
/// `field` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_trajectory_new(
    field: *const BoField,
    t0: f64,
    dt: f64,
    dealias: bool,
    out: *mut *mut BoTrajectory,
) -> BoStatus {
    guard(|| {
        let u = &as_ref(field, "field")?.0;
        let grid = u.grid();
        let bound = 1.0 / grid.max_wavenumber();
        if !(dt > 0.0 && dt <= bound) || !t0.is_finite() {
            return Err(Failure(
                BoStatus::InvalidArgument,
                format!("dt = {dt} must lie in (0, {bound}] and t0 must be finite"),
            ));
        }
        put(
            out,
            BoTrajectory {
                stepper: Stepper::with_dt(grid, dt, dealias, true),
                state: TrajectoryState::new(u.clone(), t0),
            },
        )
    })
}

/// # Safety
/// `traj` must come from `bo_trajectory_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bo_trajectory_free(traj: *mut BoTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Advances `steps` steps. On a numerical abort the trajectory keeps its
/// last finite state.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bo_trajectory_advance(traj: *mut BoTrajectory, steps: u64) -> BoStatus {
    guard(|| {
        let tr = traj.as_mut().ok_or_else(|| null("trajectory"))?;
        tr.state = tr.stepper.advance(&tr.state, steps)?;
        Ok(())
    })
}

/// # Safety
/// `traj` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_trajectory_time(traj: *const BoTrajectory, out: *mut f64) -> BoStatus {
    guard(|| write(out, as_ref(traj, "trajectory")?.state.t))
}

/// Copy of the current solution as a new field.
///
/// # Safety
/// `traj` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_trajectory_field(traj: *const BoTrajectory, out: *mut *mut BoField) -> BoStatus {
    guard(|| put(out, BoField(as_ref(traj, "trajectory")?.state.u.clone())))
}

/// Relative residual of `A / (1 + B^2 (x - x0)^2)` travelling at `speed`.
///
/// # Safety
/// `grid` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bo_profile_residual(
    grid: *const BoGrid,
    amplitude: f64,
    scale: f64,
    center: f64,
    speed: f64,
    out: *mut f64,
) -> BoStatus {
    guard(|| {
        let g = as_ref(grid, "grid")?;
        let p = SolitonParams {
            amplitude,
            scale,
            center,
            speed,
        };
        write(out, profile_residual(&p, &g.0))
    })
}
