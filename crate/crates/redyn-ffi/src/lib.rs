//! C interface for the reduced-dynamics toolkit.
//!
//! Conventions shared by every function:
//!
//! * Results are written through out-pointers; the return value is a
//!   [`RedynStatus`] code, `Ok` (0) on success.
//! * Handles (`RedynSuperOp`, `RedynOutcome`) are opaque, owned by the
//!   caller, and released with the matching `*_free` function. Strings
//!   returned through `*mut c_char` out-pointers are NUL-terminated UTF-8
//!   owned by the caller and released with [`redyn_string_free`].
//! * On any status other than `Ok`, [`redyn_last_error_message`] returns a
//!   description of what went wrong. The message is thread-local and valid
//!   until the next call into this library on the same thread.
//! * Every entry point catches panics; a panic is reported as
//!   [`RedynStatus::Panic`] instead of unwinding across the C boundary.
//!
//! Null out-pointers are rejected with [`RedynStatus::NullPointer`]. Passing
//! a handle after freeing it, or a non-NUL-terminated string, is undefined
//! behavior, as with any C API.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use redyn::channels::{choi, classify, SuperOp, SuperOpJson};
use redyn::scenario::{run_command, Command, Overrides, RunOutcome};
use redyn::{Error, TolerancePolicy};

/// Status code returned by every function in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedynStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input was rejected: malformed JSON, unknown command or field,
    /// dimension mismatch, or a value that fails validation.
    InvalidInput = 3,
    /// A numerical operation failed (singular map, non-convergent solve).
    NumericalFailure = 4,
    /// The command ran to completion and reports a verification failure
    /// (the process-level exit code 2).
    VerificationFailed = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// Opaque handle to a superoperator (a linear map on operators).
pub struct RedynSuperOp {
    inner: SuperOp,
}

/// Opaque handle to the result of a command run: report JSON, optional CSV,
/// and the process-level exit code.
pub struct RedynOutcome {
    inner: RunOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

fn status_for(e: &Error) -> RedynStatus {
    match e {
        Error::SingularMap { .. } => RedynStatus::NumericalFailure,
        _ => RedynStatus::InvalidInput,
    }
}

fn fail(e: &Error) -> RedynStatus {
    set_last_error(&e.to_string());
    status_for(e)
}

/// Run `f` with panics converted to [`RedynStatus::Panic`]. Clears the
/// thread-local error first so `Ok` never leaves a stale message behind.
fn guarded(f: impl FnOnce() -> RedynStatus) -> RedynStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = if let Some(s) = payload.downcast_ref::<&str>() {
                s.to_string()
            } else if let Some(s) = payload.downcast_ref::<String>() {
                s.clone()
            } else {
                "unknown panic".to_string()
            };
            set_last_error(&format!("internal panic: {msg}"));
            RedynStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, RedynStatus> {
    if p.is_null() {
        set_last_error("string argument is NULL");
        return Err(RedynStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|e| {
        set_last_error(&format!("string argument is not UTF-8: {e}"));
        RedynStatus::InvalidUtf8
    })
}

fn write_string(out: *mut *mut c_char, s: &str) -> RedynStatus {
    let c = match CString::new(s.replace('\0', " ")) {
        Ok(c) => c,
        Err(_) => {
            set_last_error("result string could not be encoded");
            return RedynStatus::Panic;
        }
    };
    unsafe { *out = c.into_raw() };
    RedynStatus::Ok
}

macro_rules! require_non_null {
    ($($p:expr),+ $(,)?) => {
        $(
            if $p.is_null() {
                set_last_error(concat!("argument `", stringify!($p), "` is NULL"));
                return RedynStatus::NullPointer;
            }
        )+
    };
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn redyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Description of the most recent failure on this thread, as a
/// NUL-terminated UTF-8 string. Empty when the last call succeeded. The
/// pointer is valid until the next call into this library on the same
/// thread; do not free it.
#[no_mangle]
pub extern "C" fn redyn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be NULL (a no-op) or a pointer previously returned through a
/// `*mut c_char` out-parameter of this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn redyn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a superoperator from its JSON form
/// `{"d_in": n, "d_out": m, "transfer": {"rows", "cols", "re", "im"}}`
/// (square transfers may use `"dim"` instead of `"rows"`/`"cols"`).
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. On `Ok`, `*out` owns a new handle to free with
/// [`redyn_superop_free`].
#[no_mangle]
pub unsafe extern "C" fn redyn_superop_parse(
    json: *const c_char,
    out: *mut *mut RedynSuperOp,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(out);
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let parsed: SuperOpJson = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(&Error::from(e)),
        };
        match SuperOp::from_json(&parsed) {
            Ok(op) => {
                *out = Box::into_raw(Box::new(RedynSuperOp { inner: op }));
                RedynStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Input and output dimensions of the map (it sends `d_in × d_in` operators
/// to `d_out × d_out` operators).
///
/// # Safety
/// `op` must be a live handle from [`redyn_superop_parse`]; `d_in` and
/// `d_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn redyn_superop_dims(
    op: *const RedynSuperOp,
    d_in: *mut usize,
    d_out: *mut usize,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(op, d_in, d_out);
        let op = &(*op).inner;
        *d_in = op.d_in();
        *d_out = op.d_out();
        RedynStatus::Ok
    })
}

/// Smallest eigenvalue of the map's Choi matrix. Non-negative within
/// tolerance exactly when the map is completely positive.
///
/// # Safety
/// `op` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn redyn_superop_min_choi_eigenvalue(
    op: *const RedynSuperOp,
    out: *mut f64,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(op, out);
        let tol = TolerancePolicy::default();
        match choi(&(*op).inner).min_eigenvalue(&tol) {
            Ok(v) => {
                *out = v;
                RedynStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Classify the map (Hermiticity preservation, trace preservation, complete
/// positivity, sampled positivity) and return the report as JSON.
///
/// # Safety
/// `op` must be a live handle; `out_json` must be a valid pointer. On `Ok`,
/// `*out_json` owns a string to free with [`redyn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn redyn_superop_classify(
    op: *const RedynSuperOp,
    n_samples: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(op, out_json);
        let tol = TolerancePolicy::default();
        let report = classify(&(*op).inner, n_samples, seed, &tol);
        match serde_json::to_string_pretty(&report) {
            Ok(mut s) => {
                s.push('\n');
                write_string(out_json, &s)
            }
            Err(e) => fail(&Error::from(e)),
        }
    })
}

/// Release a superoperator handle.
///
/// # Safety
/// `op` must be NULL (a no-op) or a live handle from
/// [`redyn_superop_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn redyn_superop_free(op: *mut RedynSuperOp) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Run a command against a JSON config — the same contract as the `redyn`
/// binary. `command` is one of `classify-map`, `build-assignment`,
/// `u-consistency`, `verify-prop1`, `cp-family`, `lindblad-scan`.
///
/// `seed` overrides the config's seed when non-NULL; `tol_scale` multiplies
/// every tolerance when non-NULL (must point to a positive finite value).
///
/// Returns `Ok` when the command completes with exit code 0 and
/// `VerificationFailed` when it completes with exit code 2 (a counterexample
/// was found); in both cases `*out` owns an outcome handle carrying the full
/// report. Input errors return without an outcome.
///
/// # Safety
/// `command` and `config_json` must be valid NUL-terminated strings; `out`
/// must be a valid pointer; `seed` and `tol_scale` must each be NULL or
/// valid. On `Ok` or `VerificationFailed`, `*out` owns a handle to free with
/// [`redyn_outcome_free`].
#[no_mangle]
pub unsafe extern "C" fn redyn_run(
    command: *const c_char,
    config_json: *const c_char,
    seed: *const u64,
    tol_scale: *const f64,
    out: *mut *mut RedynOutcome,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(out);
        let name = match read_str(command) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let config = match read_str(config_json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let Some(cmd) = Command::from_slug(name) else {
            set_last_error(&format!("unknown command `{name}`"));
            return RedynStatus::InvalidInput;
        };
        let overrides = Overrides {
            seed: if seed.is_null() { None } else { Some(*seed) },
            tol_scale: if tol_scale.is_null() {
                None
            } else {
                Some(*tol_scale)
            },
        };
        match run_command(cmd, config, &overrides) {
            Ok(outcome) => {
                let failed = outcome.exit_code == 2;
                if failed {
                    set_last_error("verification failed: a counterexample was found");
                }
                *out = Box::into_raw(Box::new(RedynOutcome { inner: outcome }));
                if failed {
                    RedynStatus::VerificationFailed
                } else {
                    RedynStatus::Ok
                }
            }
            Err(e) => fail(&e),
        }
    })
}

/// Process-level exit code of a completed run: 0 for success, 2 for a
/// verification failure.
///
/// # Safety
/// `outcome` must be a live handle from [`redyn_run`]; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn redyn_outcome_exit_code(
    outcome: *const RedynOutcome,
    out: *mut i32,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(outcome, out);
        *out = (*outcome).inner.exit_code;
        RedynStatus::Ok
    })
}

/// The run's JSON report (identical to the binary's stdout).
///
/// # Safety
/// `outcome` must be a live handle; `out_json` must be a valid pointer. On
/// `Ok`, `*out_json` owns a string to free with [`redyn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn redyn_outcome_report_json(
    outcome: *const RedynOutcome,
    out_json: *mut *mut c_char,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(outcome, out_json);
        write_string(out_json, &(*outcome).inner.report_json)
    })
}

/// The run's CSV sidecar, or NULL when the command produces none (only
/// `lindblad-scan` writes CSV).
///
/// # Safety
/// `outcome` must be a live handle; `out_csv` must be a valid pointer. On
/// `Ok` with a non-NULL result, `*out_csv` owns a string to free with
/// [`redyn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn redyn_outcome_csv(
    outcome: *const RedynOutcome,
    out_csv: *mut *mut c_char,
) -> RedynStatus {
    guarded(|| {
        require_non_null!(outcome, out_csv);
        match &(*outcome).inner.csv {
            Some(csv) => write_string(out_csv, csv),
            None => {
                *out_csv = ptr::null_mut();
                RedynStatus::Ok
            }
        }
    })
}

/// Release an outcome handle.
///
/// # Safety
/// `outcome` must be NULL (a no-op) or a live handle from [`redyn_run`], not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn redyn_outcome_free(outcome: *mut RedynOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}
