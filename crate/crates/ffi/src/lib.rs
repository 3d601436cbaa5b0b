//! C ABI for `pascal-boundary`.
//!
//! Every fallible call returns a [`PbStatus`]. On failure the message is kept
//! per thread and can be fetched with [`pb_last_error_message`]. Strings handed
//! out by the library must be released with [`pb_string_free`]; handles with
//! their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pascal_boundary::boundary::{boundary_report, ReportOptions};
use pascal_boundary::dims::dimension_table;
use pascal_boundary::graph::{make_graph, FamilySpec, GridPoint, WeightedPascalGraph};
use pascal_boundary::measures::{phi_from_family, MeasureFamily, ProbabilityFunction};
use pascal_boundary::selfcheck::run_self_check;
use pascal_boundary::simulate::{run_job, SimulationJob};
use pascal_boundary::Error;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidParameter = 4,
    Io = 5,
    NonConvergence = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// A weighted Pascal graph.
pub struct PbGraph {
    graph: WeightedPascalGraph,
}

/// A probability function on a finite triangle.
pub struct PbPhi {
    phi: ProbabilityFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> PbStatus {
    match err {
        Error::Parse(_) | Error::Json(_) => PbStatus::Parse,
        Error::Io(_) | Error::Csv(_) => PbStatus::Io,
        Error::TruncationFailure { .. } => PbStatus::NonConvergence,
        Error::TooLarge { .. } | Error::HorizonMismatch { .. } | Error::OutsideSupport { .. } => {
            PbStatus::OutOfRange
        }
        _ => PbStatus::InvalidParameter,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PbStatus>) -> PbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            PbStatus::Panic
        }
    }
}

fn fail(err: Error) -> PbStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, PbStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(PbStatus::NullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        PbStatus::InvalidUtf8
    })
}

fn check_out<T>(out: *mut T) -> Result<(), PbStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(PbStatus::NullArgument);
    }
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), PbStatus> {
    let c = CString::new(s).map_err(|_| {
        set_error("output contains a NUL byte");
        PbStatus::Panic
    })?;
    *out = c.into_raw();
    Ok(())
}

/// Copy of the last error message on this thread, or NULL if there was none.
/// Free with `pb_string_free`.
#[no_mangle]
pub extern "C" fn pb_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |m| m.clone().into_raw())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a graph from a family spec such as `"qpascal;q=1/2"` or
/// `"gstirling;a=linear:1,1;b=const:0"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_graph_new(spec: *const c_char, out: *mut *mut PbGraph) -> PbStatus {
    guard(|| {
        check_out(out)?;
        let spec: FamilySpec = read_str(spec)?.parse().map_err(fail)?;
        let graph = make_graph(&spec, spec.mode()).map_err(fail)?;
        *out = Box::into_raw(Box::new(PbGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a handle from `pb_graph_new` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pb_graph_free(g: *mut PbGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn graph_ref<'a>(g: *const PbGraph) -> Result<&'a PbGraph, PbStatus> {
    g.as_ref().ok_or_else(|| {
        set_error("null graph handle");
        PbStatus::NullArgument
    })
}

unsafe fn phi_ref<'a>(p: *const PbPhi) -> Result<&'a PbPhi, PbStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null probability-function handle");
        PbStatus::NullArgument
    })
}

/// `d(h,t)` as text: `p/q` in exact mode, a decimal in float mode.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_graph_dimension(
    g: *const PbGraph,
    h: usize,
    t: usize,
    out: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        check_out(out)?;
        let g = graph_ref(g)?;
        let table = dimension_table(&g.graph, h + t).map_err(fail)?;
        write_string(out, table.at(h, t).to_string())
    })
}

/// `d(h,t)` rounded to a double.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_graph_dimension_f64(
    g: *const PbGraph,
    h: usize,
    t: usize,
    out: *mut f64,
) -> PbStatus {
    guard(|| {
        check_out(out)?;
        let g = graph_ref(g)?;
        let table = dimension_table(&g.graph, h + t).map_err(fail)?;
        *out = table.at(h, t).to_f64();
        Ok(())
    })
}

/// `φ` of a catalog measure such as `"polya;a=1;b=1"` on `h + t ≤ horizon`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_phi_new(
    spec: *const c_char,
    horizon: usize,
    out: *mut *mut PbPhi,
) -> PbStatus {
    guard(|| {
        check_out(out)?;
        let fam: MeasureFamily = read_str(spec)?.parse().map_err(fail)?;
        fam.validate().map_err(fail)?;
        let phi = phi_from_family(&fam, horizon).map_err(fail)?;
        *out = Box::into_raw(Box::new(PbPhi { phi }));
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle from `pb_phi_new` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pb_phi_free(p: *mut PbPhi) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Horizon of the triangle, or 0 for a NULL handle.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pb_phi_horizon(p: *const PbPhi) -> usize {
    p.as_ref().map_or(0, |p| p.phi.horizon())
}

fn phi_at(p: &PbPhi, h: usize, t: usize) -> Result<&pascal_boundary::Scalar, PbStatus> {
    p.phi.get(GridPoint::new(h, t)).ok_or_else(|| {
        set_error(format!("({h}, {t}) lies beyond horizon {}", p.phi.horizon()));
        PbStatus::OutOfRange
    })
}

/// `φ(h,t)` as text.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_phi_value(
    p: *const PbPhi,
    h: usize,
    t: usize,
    out: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        check_out(out)?;
        let v = phi_at(phi_ref(p)?, h, t)?;
        write_string(out, v.to_string())
    })
}

/// `φ(h,t)` rounded to a double.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_phi_value_f64(
    p: *const PbPhi,
    h: usize,
    t: usize,
    out: *mut f64,
) -> PbStatus {
    guard(|| {
        check_out(out)?;
        *out = phi_at(phi_ref(p)?, h, t)?.to_f64();
        Ok(())
    })
}

/// Boundary report of a graph family as JSON.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_boundary_report_json(
    spec: *const c_char,
    max_extremes: usize,
    out_json: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        check_out(out_json)?;
        let spec: FamilySpec = read_str(spec)?.parse().map_err(fail)?;
        let opts = ReportOptions {
            max_extremes,
            ..ReportOptions::default()
        };
        let report = boundary_report(&spec, &opts).map_err(fail)?;
        let json = serde_json::to_string(&report).map_err(|e| fail(e.into()))?;
        write_string(out_json, json)
    })
}

/// Runs a simulation job given as JSON and returns the result as JSON.
///
/// # Safety
/// `job_json` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_simulate_json(
    job_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        check_out(out_json)?;
        let job: SimulationJob = serde_json::from_str(read_str(job_json)?).map_err(|e| fail(e.into()))?;
        let res = run_job(&job).map_err(fail)?;
        let json = serde_json::to_string(&res).map_err(|e| fail(e.into()))?;
        write_string(out_json, json)
    })
}

/// Runs the built-in oracle suites; `*all_passed` is 1 if every suite passed.
///
/// # Safety
/// `all_passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_self_check(all_passed: *mut c_int) -> PbStatus {
    guard(|| {
        check_out(all_passed)?;
        let ok = run_self_check().iter().all(|r| r.passed);
        *all_passed = c_int::from(ok);
        if !ok {
            set_error("an oracle suite failed");
        }
        Ok(())
    })
}
