//! C interface: opaque field handles, integer status codes and a thread-local error message.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fblab::analysis::{analyze_point, AnalysisConfig, AnalysisPoint, PointKind};
use fblab::config::RunConfig;
use fblab::epiperimetric::epi_constants;
use fblab::field::{Field, GridField};
use fblab::frequency::PointClass;
use fblab::geometry::{Domain, DomainSpec};
use fblab::interface::{extract_interface, to_svg};
use fblab::run::run;
use fblab::solver::{lipschitz_estimate, minimize_partition, DensityField, SolverConfig};
use fblab::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FblabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    SolverFailure = 4,
    HypothesisViolated = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// Boundary point class returned by [`fblab_field_classify`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FblabPointClass {
    Z1 = 1,
    Z2 = 2,
    Singular = 3,
    Unknown = 0,
}

/// A solved partition.
pub struct FblabField {
    field: DensityField,
    grid: GridField,
    lip: f64,
}

/// Certified epiperimetric constants in dimension two.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FblabConstants {
    pub q2_squared: f64,
    pub delta2: f64,
    pub eps_bd: f64,
    pub eps_int: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FblabStatus {
    match e {
        Error::InvalidInput(_) | Error::NotSmoothed | Error::ZeroTrace => FblabStatus::InvalidArgument,
        Error::OutOfRange { .. } => FblabStatus::OutOfRange,
        Error::ComponentCollapse { .. } => FblabStatus::SolverFailure,
        Error::Hypothesis(_) | Error::TooManyLowModes(_) => FblabStatus::HypothesisViolated,
        Error::Config { .. } => FblabStatus::Config,
        Error::Io(_) => FblabStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (FblabStatus, String)>) -> FblabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FblabStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            FblabStatus::Panic
        }
    }
}

fn lift(e: Error) -> (FblabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FblabStatus, String) {
    (FblabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn field_ref<'a>(f: *const FblabField) -> Result<&'a FblabField, (FblabStatus, String)> {
    f.as_ref().ok_or_else(|| null("field"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (FblabStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, (FblabStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (FblabStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Message of the last failed call on this thread (empty after a success). Valid until the next call.
#[no_mangle]
pub extern "C" fn fblab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fblab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solve for the optimal `n`-partition of the disk of `radius` on a grid of spacing `h`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to release with [`fblab_field_free`].
#[no_mangle]
pub unsafe extern "C" fn fblab_solve_disk(radius: f64, h: f64, n: u32, seed: u64, out: *mut *mut FblabField) -> FblabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let spec = DomainSpec::new(Domain::disk(radius).map_err(lift)?, h).map_err(lift)?;
        let cfg = SolverConfig { n: n as usize, seed, ..Default::default() };
        let field = minimize_partition(&spec, &cfg).map_err(lift)?;
        let grid = GridField::new(&field);
        let lip = lipschitz_estimate(&field);
        *out = Box::into_raw(Box::new(FblabField { field, grid, lip }));
        Ok(())
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `field` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_free(field: *mut FblabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_components(field: *const FblabField, out: *mut usize) -> FblabStatus {
    guard(|| {
        let f = field_ref(field)?;
        *out_ref(out, "out")? = f.field.n();
        Ok(())
    })
}

/// Eigenvalue of component `i`.
///
/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_eigenvalue(field: *const FblabField, i: usize, out: *mut f64) -> FblabStatus {
    guard(|| {
        let f = field_ref(field)?;
        let v = f.field.eigenvalues.get(i).ok_or((FblabStatus::OutOfRange, format!("component {i} does not exist")))?;
        *out_ref(out, "out")? = *v;
        Ok(())
    })
}

/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_eigenvalue_sum(field: *const FblabField, out: *mut f64) -> FblabStatus {
    guard(|| {
        let f = field_ref(field)?;
        *out_ref(out, "out")? = f.field.eigenvalue_sum();
        Ok(())
    })
}

/// Interpolated value of component `i` at `(x, y)`; zero outside the domain.
///
/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_sample(field: *const FblabField, i: usize, x: f64, y: f64, out: *mut f64) -> FblabStatus {
    guard(|| {
        let f = field_ref(field)?;
        if i >= f.field.n() {
            return Err((FblabStatus::OutOfRange, format!("component {i} does not exist")));
        }
        *out_ref(out, "out")? = f.grid.value(i, [x, y]);
        Ok(())
    })
}

/// Lipschitz estimate of the solved field.
///
/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_lipschitz(field: *const FblabField, out: *mut f64) -> FblabStatus {
    guard(|| {
        let f = field_ref(field)?;
        *out_ref(out, "out")? = f.lip;
        Ok(())
    })
}

/// Frequency at the boundary point nearest `(x, y)` and its classification.
///
/// # Safety
/// `field` must be a live handle; `gamma` and `class` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_classify(
    field: *const FblabField,
    x: f64,
    y: f64,
    gamma: *mut f64,
    class: *mut FblabPointClass,
) -> FblabStatus {
    guard(|| {
        let f = field_ref(field)?;
        let gamma = out_ref(gamma, "gamma")?;
        let class = out_ref(class, "class")?;
        let p = AnalysisPoint { kind: PointKind::Explicit, point: [x, y] };
        let r = analyze_point(&f.field, &f.grid, f.lip, p, &AnalysisConfig::default()).map_err(lift)?;
        *gamma = r.profile.gamma_estimate.unwrap_or(f64::NAN);
        *class = match r.class {
            PointClass::Z1 => FblabPointClass::Z1,
            PointClass::Z2 => FblabPointClass::Z2,
            PointClass::S => FblabPointClass::Singular,
            PointClass::Unknown => FblabPointClass::Unknown,
        };
        Ok(())
    })
}

/// Write the partition map with the interface overlay as SVG.
///
/// # Safety
/// `field` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn fblab_field_write_svg(field: *const FblabField, path: *const c_char) -> FblabStatus {
    guard(|| {
        let f = field_ref(field)?;
        let path = path_arg(path)?;
        let g = extract_interface(&f.field).map_err(lift)?;
        std::fs::write(Path::new(&path), to_svg(&f.field, &g)).map_err(|e| lift(e.into()))
    })
}

/// Run a configuration file; `passed` receives 1 when every check passes, else 0.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fblab_run_config(path: *const c_char, passed: *mut i32) -> FblabStatus {
    guard(|| {
        let path = path_arg(path)?;
        let passed = out_ref(passed, "passed")?;
        let cfg = RunConfig::load(Path::new(&path)).map_err(lift)?;
        let r = run(&cfg).map_err(lift)?;
        *passed = r.report.passed() as i32;
        Ok(())
    })
}

/// Certified epiperimetric constants in d = 2.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fblab_constants(out: *mut FblabConstants) -> FblabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let c = epi_constants(2).map_err(lift)?;
        *out = FblabConstants { q2_squared: c.q * c.q, delta2: c.delta, eps_bd: c.eps_bd, eps_int: c.eps_int };
        Ok(())
    })
}
