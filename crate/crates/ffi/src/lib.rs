//! C ABI for ward-ident.
//!
//! Conventions:
//!
//! * every fallible function returns a [`WiStatus`]; `WI_STATUS_OK` is zero;
//! * on failure a human-readable message is kept per thread and can be read
//!   with [`wi_last_error_message`] until the next failing call on the same
//!   thread;
//! * objects are opaque handles created by `*_new`/`*_load` functions and
//!   released with the matching `*_free` function (passing NULL to a free
//!   function is a no-op);
//! * strings are NUL-terminated UTF-8; output values are written through
//!   caller-provided pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ward_ident::pipeline::{run_dynamic_stage, run_report, run_steady_stage, PipelineConfig};
use ward_ident::steady::{short_circuit, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use ward_ident::{load_network, Error, Network};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WiStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input document or configuration rejected.
    Validation = 3,
    /// Numerical failure: singular matrix, non-convergence, divergence.
    Numerical = 4,
    /// File could not be read or written.
    Io = 5,
    /// A required earlier step (e.g. the steady-state stage) is missing.
    Precondition = 6,
    /// An output buffer is shorter than the result.
    BufferTooSmall = 7,
    /// Internal panic caught at the boundary.
    Panic = 8,
}

/// Network model handle.
pub struct WiNetwork {
    net: Network,
}

/// Identification run handle: a loaded run configuration.
pub struct WiPipeline {
    config: PipelineConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> WiStatus {
    match err {
        Error::Io { .. } => WiStatus::Io,
        Error::Precondition(_) | Error::MissingReference(_) => WiStatus::Precondition,
        e if e.is_numerical() => WiStatus::Numerical,
        _ => WiStatus::Validation,
    }
}

struct Failure(WiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            WiStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(WiStatus::NullArgument, format!("argument '{name}' is NULL"))
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        Failure(
            WiStatus::InvalidUtf8,
            format!("argument '{name}' is not valid UTF-8"),
        )
    })
}

/// # Safety
/// `ptr` must be NULL or point to a live object of type `T`.
unsafe fn ref_arg<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(name))
}

/// # Safety
/// `ptr` must be NULL or valid for one write of `T`.
unsafe fn out_arg<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(name))
}

/// Message of the last failure on the calling thread, or NULL when no call
/// has failed yet. The pointer stays valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn wi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a network document (JSON text).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wi_network_from_json(
    json: *const c_char,
    out: *mut *mut WiNetwork,
) -> WiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let net = load_network(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(WiNetwork { net }));
        Ok(())
    })
}

/// Reads and parses a network document from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wi_network_load(
    path: *const c_char,
    out: *mut *mut WiNetwork,
) -> WiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let net = load_network(&text)?;
        *out = Box::into_raw(Box::new(WiNetwork { net }));
        Ok(())
    })
}

/// Releases a network handle.
///
/// # Safety
/// `net` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wi_network_free(net: *mut WiNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of buses of the network.
///
/// # Safety
/// `net` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wi_network_bus_count(net: *const WiNetwork, out: *mut usize) -> WiStatus {
    guard(|| {
        let n = ref_arg(net, "net")?;
        *out_arg(out, "out")? = n.net.buses().len();
        Ok(())
    })
}

/// Solves the power flow and writes voltage magnitudes (pu) and angles
/// (rad) in bus order into `v` and `theta`, each of length `len`.
/// `iterations` may be NULL.
///
/// # Safety
/// `net` must be a live handle; `v` and `theta` must be valid for `len`
/// writes; `iterations` must be NULL or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wi_power_flow(
    net: *const WiNetwork,
    v: *mut f64,
    theta: *mut f64,
    len: usize,
    iterations: *mut usize,
) -> WiStatus {
    guard(|| {
        let n = ref_arg(net, "net")?;
        if v.is_null() {
            return Err(null("v"));
        }
        if theta.is_null() {
            return Err(null("theta"));
        }
        let nb = n.net.buses().len();
        if len < nb {
            return Err(Failure(
                WiStatus::BufferTooSmall,
                format!("buffers hold {len} values, the network has {nb} buses"),
            ));
        }
        let sol = solve_power_flow(&n.net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
        sol.ensure_converged()?;
        std::slice::from_raw_parts_mut(v, nb).copy_from_slice(&sol.v);
        std::slice::from_raw_parts_mut(theta, nb).copy_from_slice(&sol.theta);
        if let Some(it) = iterations.as_mut() {
            *it = sol.iterations;
        }
        Ok(())
    })
}

/// Three-phase short-circuit power (MVA) and current (kA) at `bus` with
/// voltage factor `c`. Either output pointer may be NULL.
///
/// # Safety
/// `net` must be a live handle; `bus` a NUL-terminated string; outputs
/// NULL or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wi_short_circuit(
    net: *const WiNetwork,
    bus: *const c_char,
    c: f64,
    skss_mva: *mut f64,
    ikss_ka: *mut f64,
) -> WiStatus {
    guard(|| {
        let n = ref_arg(net, "net")?;
        let r = short_circuit(&n.net, str_arg(bus, "bus")?, c)?;
        if let Some(s) = skss_mva.as_mut() {
            *s = r.skss_mva;
        }
        if let Some(i) = ikss_ka.as_mut() {
            *i = r.ikss_ka;
        }
        Ok(())
    })
}

/// Loads a run configuration file (relative paths resolve against its
/// directory).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wi_pipeline_load(
    path: *const c_char,
    out: *mut *mut WiPipeline,
) -> WiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = PipelineConfig::load(PathBuf::from(str_arg(path, "path")?).as_path())?;
        *out = Box::into_raw(Box::new(WiPipeline { config }));
        Ok(())
    })
}

/// Releases a pipeline handle.
///
/// # Safety
/// `p` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wi_pipeline_free(p: *mut WiPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Redirects the run directory of a loaded configuration.
///
/// # Safety
/// `p` must be a live handle; `run_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wi_pipeline_set_run_dir(
    p: *mut WiPipeline,
    run_dir: *const c_char,
) -> WiStatus {
    guard(|| {
        let p = out_arg(p, "p")?;
        p.config.run_dir = PathBuf::from(str_arg(run_dir, "run_dir")?);
        Ok(())
    })
}

/// Generates the references and runs the steady-state stage; writes the
/// final steady-state objective to `objective` (may be NULL).
///
/// # Safety
/// `p` must be a live handle; `objective` NULL or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wi_pipeline_identify_steady(
    p: *const WiPipeline,
    objective: *mut f64,
) -> WiStatus {
    guard(|| {
        let p = ref_arg(p, "p")?;
        let out = run_steady_stage(&p.config)?;
        if let Some(o) = objective.as_mut() {
            *o = out.objective;
        }
        Ok(())
    })
}

/// Runs the dynamic stage on the persisted steady-state result; writes the
/// final dynamic objective to `objective` (may be NULL).
///
/// # Safety
/// `p` must be a live handle; `objective` NULL or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wi_pipeline_identify_dynamic(
    p: *const WiPipeline,
    objective: *mut f64,
) -> WiStatus {
    guard(|| {
        let p = ref_arg(p, "p")?;
        let out = run_dynamic_stage(&p.config)?;
        if let Some(o) = objective.as_mut() {
            *o = out.objective;
        }
        Ok(())
    })
}

/// Writes the comparison report into the run directory.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wi_pipeline_report(p: *const WiPipeline) -> WiStatus {
    guard(|| {
        let p = ref_arg(p, "p")?;
        run_report(&p.config.run_dir)?;
        Ok(())
    })
}
