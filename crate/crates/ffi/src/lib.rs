//! C ABI over `kslab`.
//!
//! Objects cross the boundary as opaque handles created by `kslab_*_new`
//! style functions and released with the matching `*_free`. Every call returns
//! a [`KslabStatus`]; on failure `kslab_last_error` copies a message for the
//! calling thread. Panics never unwind into C: they become `KSLAB_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use kslab::capacity::{t_infinity_bound, BlowupCase};
use kslab::config::Config;
use kslab::evolve::{integrate, Monitor, Outcome, RunConfig, Trajectory};
use kslab::field::{lp_norm, BoundaryKind, Field, Grid};
use kslab::kernels::{fit_decay, fundamental_solution, kernel_grid};
use kslab::models::{critical_exponents, Family, ModelSpec};
use kslab::Error;

/// Result of every exported call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KslabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Outcome tag of a trajectory.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KslabOutcome {
    Completed = 0,
    BlowUp = 10,
    NumericalFailure = 20,
}

/// Boundary conditions for interval grids.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KslabBoundary {
    Navier = 0,
    Dirichlet = 1,
}

/// Blow-up case for the closed-form certificate bound.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KslabCase {
    Strict = 0,
    Zero = 1,
    Negative = 2,
}

pub struct KslabGrid(Arc<Grid>);
pub struct KslabField(Field);
pub struct KslabModel(ModelSpec);
pub struct KslabTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(KslabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_config_error() {
            KslabStatus::Config
        } else {
            match e {
                Error::Io { .. } | Error::Format { .. } | Error::CheckpointMismatch(_) => KslabStatus::Io,
                Error::NonFinite { .. }
                | Error::PicardDivergence { .. }
                | Error::KernelDomain(_)
                | Error::TooFewPeaks { .. } => KslabStatus::Numerical,
                _ => KslabStatus::InvalidArgument,
            }
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(KslabStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(KslabStatus::NullPointer, format!("`{name}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KslabStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (KslabStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(payload) => {
            let m = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            (KslabStatus::Panic, format!("internal panic: {m}"))
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
    status
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    *out = value;
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not UTF-8")))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len < src.len() {
        return Err(Failure(
            KslabStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn kslab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- grids ----

/// Periodic cube [0, extent)^dim with `points` nodes per axis.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn kslab_grid_periodic(dim: usize, extent: f64, points: usize, out: *mut *mut KslabGrid) -> KslabStatus {
    guard(|| {
        let g = Grid::periodic_cube(dim, extent, points)?;
        put(out, KslabGrid(g), "out")
    })
}

/// Interval (-half_length, half_length) with `points` nodes including the ends.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn kslab_grid_interval(
    half_length: f64,
    points: usize,
    bc: KslabBoundary,
    out: *mut *mut KslabGrid,
) -> KslabStatus {
    guard(|| {
        let bc = match bc {
            KslabBoundary::Navier => BoundaryKind::Navier,
            KslabBoundary::Dirichlet => BoundaryKind::Dirichlet,
        };
        put(out, KslabGrid(Grid::interval(half_length, points, bc)?), "out")
    })
}

/// Number of grid nodes.
///
/// # Safety
/// `grid` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_grid_len(grid: *const KslabGrid, out: *mut usize) -> KslabStatus {
    guard(|| write(out, get(grid, "grid")?.0.len(), "out"))
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kslab_grid_free(grid: *mut KslabGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

// ---- fields ----

/// Copies `len` values (row-major, last axis fastest) into a new field.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_field_new(
    grid: *const KslabGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut KslabField,
) -> KslabStatus {
    guard(|| {
        let g = get(grid, "grid")?.0.clone();
        if values.is_null() {
            return Err(null("values"));
        }
        let data = std::slice::from_raw_parts(values, len).to_vec();
        put(out, KslabField(Field::new(g, data)?), "out")
    })
}

/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_field_len(field: *const KslabField, out: *mut usize) -> KslabStatus {
    guard(|| write(out, get(field, "field")?.0.len(), "out"))
}

/// Copies the values into `out`, which must hold at least the field length.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kslab_field_values(field: *const KslabField, out: *mut f64, len: usize) -> KslabStatus {
    guard(|| copy_out(get(field, "field")?.0.values(), out, len))
}

/// ‖v‖_p by quadrature; pass `INFINITY` for the sup norm.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_field_norm(field: *const KslabField, p: f64, out: *mut f64) -> KslabStatus {
    guard(|| write(out, lp_norm(&get(field, "field")?.0, p)?, "out"))
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kslab_field_free(field: *mut KslabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

// ---- models and integration ----

/// Model of the named family (`"kse_ibvp"`, `"mkse"`, `"cahn_hilliard"`, ...)
/// with unit drift along every axis. For `mkse`, `m` is the leading order 2l.
///
/// # Safety
/// `family` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_model_new(
    family: *const c_char,
    m: u32,
    p: f64,
    dim: usize,
    out: *mut *mut KslabModel,
) -> KslabStatus {
    guard(|| {
        let family: Family = text(family, "family")?.parse().map_err(invalid)?;
        let spec = match family {
            Family::KseIbvp => ModelSpec::kse_ibvp(),
            Family::Mkse if m % 2 == 0 => ModelSpec::mkse(m / 2, p, dim),
            _ => ModelSpec::new(family, m, p, dim),
        };
        put(out, KslabModel(spec), "out")
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kslab_model_free(model: *mut KslabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Integrates to `t_end` with step `dt`, recording `sup_norm` and `l2`.
/// Blow-up and numerical failure are outcomes, not errors.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_integrate(
    model: *const KslabModel,
    initial: *const KslabField,
    dt: f64,
    t_end: f64,
    threshold: f64,
    out: *mut *mut KslabTrajectory,
) -> KslabStatus {
    guard(|| {
        let spec = get(model, "model")?.0.clone();
        let v0 = get(initial, "initial")?.0.clone();
        let mut cfg = RunConfig::new(spec, v0, dt, t_end).with_monitors(&[Monitor::SupNorm, Monitor::L2]);
        cfg.blowup_threshold = threshold;
        put(out, KslabTrajectory(integrate(&cfg)?), "out")
    })
}

/// Outcome and, for blow-up, the time bracket (NaN otherwise).
///
/// # Safety
/// `traj` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_outcome(
    traj: *const KslabTrajectory,
    outcome: *mut KslabOutcome,
    lower: *mut f64,
    upper: *mut f64,
) -> KslabStatus {
    guard(|| {
        let (tag, lo, hi) = match get(traj, "traj")?.0.outcome {
            Outcome::Completed => (KslabOutcome::Completed, f64::NAN, f64::NAN),
            Outcome::BlowUp { lower, upper } => (KslabOutcome::BlowUp, lower, upper),
            Outcome::NumericalFailure { time } => (KslabOutcome::NumericalFailure, time, time),
        };
        write(outcome, tag, "outcome")?;
        write(lower, lo, "lower")?;
        write(upper, hi, "upper")
    })
}

/// Number of recorded samples.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_len(traj: *const KslabTrajectory, out: *mut usize) -> KslabStatus {
    guard(|| write(out, get(traj, "traj")?.0.times.len(), "out"))
}

/// Copies a series (`"t"` for the time axis, otherwise a monitor name).
///
/// # Safety
/// `name` must be NUL-terminated; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_series(
    traj: *const KslabTrajectory,
    name: *const c_char,
    out: *mut f64,
    len: usize,
) -> KslabStatus {
    guard(|| {
        let t = &get(traj, "traj")?.0;
        let name = text(name, "name")?;
        let data = if name == "t" {
            &t.times[..]
        } else {
            t.series(name).ok_or_else(|| invalid(format!("no series `{name}`")))?
        };
        copy_out(data, out, len)
    })
}

/// Last finite state as a new field handle.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_final(traj: *const KslabTrajectory, out: *mut *mut KslabField) -> KslabStatus {
    guard(|| {
        let t = &get(traj, "traj")?.0;
        let f = t.final_state.first().ok_or_else(|| invalid("trajectory has no state"))?;
        put(out, KslabField(f.clone()), "out")
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_free(traj: *mut KslabTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

// ---- scalar utilities ----

/// One-dimensional kernel on [-half_width, half_width) with its mass and
/// fitted decay exponent.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_kernel_decay(
    m: u32,
    half_width: f64,
    points: usize,
    mass: *mut f64,
    alpha: *mut f64,
) -> KslabStatus {
    guard(|| {
        let mut k = fundamental_solution(m, &kernel_grid(1, half_width, points)?)?;
        let fit = fit_decay(&mut k)?;
        write(mass, k.mass, "mass")?;
        write(alpha, fit.alpha, "alpha")
    })
}

/// Upper bound on the blow-up time of J' ≥ κ²J² + H. `a` is ignored for the
/// zero case.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_t_infinity(kind: KslabCase, a: f64, kappa: f64, j0: f64, out: *mut f64) -> KslabStatus {
    guard(|| {
        let case = match kind {
            KslabCase::Strict => BlowupCase::Strict { a },
            KslabCase::Zero => BlowupCase::Zero,
            KslabCase::Negative => BlowupCase::Negative { a },
        };
        write(out, t_infinity_bound(&case, kappa, j0)?, "out")
    })
}

/// Critical exponent 1 + 2(2m-1)/N as a double.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_critical_exponent(m: u32, n: u32, out: *mut f64) -> KslabStatus {
    guard(|| {
        let r = critical_exponents(m, n, None)?;
        write(out, *r.p0_mkse.numer() as f64 / *r.p0_mkse.denom() as f64, "out")
    })
}

/// Runs a configuration text (same format as the CLI) into `out_dir`.
/// `exit_code` receives the run's exit code (0, 10 or 20).
///
/// # Safety
/// Strings must be NUL-terminated; `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kslab_run_config(config: *const c_char, out_dir: *const c_char, exit_code: *mut i32) -> KslabStatus {
    guard(|| {
        let cfg = Config::from_text(text(config, "config")?)?;
        cfg.validate()?;
        let dir = Path::new(text(out_dir, "out_dir")?);
        let code = if cfg.is_sweep() {
            let runs = kslab::app::execute_sweep(&cfg, dir, kslab::app::workers_from_env())?;
            runs.iter().map(|r| r.exit_code).find(|&c| c != 0).unwrap_or(0)
        } else {
            kslab::app::execute(&cfg, dir, None)?.exit_code
        };
        write(exit_code, code, "exit_code")
    })
}
