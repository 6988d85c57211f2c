//! C ABI over the simulation kernel.
//!
//! Handles are opaque and owned by the caller once returned; free each with
//! its `_free` function. Strings returned as `char *` are owned by the caller
//! and released with [`attend_string_free`]; `const char *` results borrow from
//! a handle and live as long as it does. On a non-OK status the message is
//! available from [`attend_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use attend::cp::{emit_trace, load_cp, RuntimeConfig, TraceFormat};
use attend::executive::{Library, TaskSpec};
use attend::harness::{fixations_csv, run_trial, TrialResult};
use attend::hierarchy::{Hierarchy, HierarchyConfig};
use attend::oracle::{claims_csv, claims_filtered};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttendStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Program or task text did not parse or validate.
    Parse = 3,
    /// The kernel rejected the request (unknown program, infeasible display).
    Runtime = 4,
    Panic = 5,
}

/// Default hierarchy, runtime configuration and program library.
pub struct AttendKernel {
    library: Library,
    hierarchy: Hierarchy,
    config: RuntimeConfig,
}

/// Result of one trial.
pub struct AttendTrial {
    result: TrialResult,
    response: Option<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn guard(f: impl FnOnce() -> AttendStatus) -> AttendStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            AttendStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, AttendStatus> {
    if p.is_null() {
        set_error("null pointer argument");
        return Err(AttendStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not UTF-8");
        AttendStatus::InvalidUtf8
    })
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread; empty if none.
#[no_mangle]
pub extern "C" fn attend_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn attend_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn attend_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Kernel with the built-in programs and default hierarchy. Never null.
#[no_mangle]
pub extern "C" fn attend_kernel_new() -> *mut AttendKernel {
    Box::into_raw(Box::new(AttendKernel {
        library: Library::builtin(),
        hierarchy: Hierarchy::new(HierarchyConfig::default()).expect("default hierarchy"),
        config: RuntimeConfig::default(),
    }))
}

/// # Safety
/// `k` must come from [`attend_kernel_new`]. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn attend_kernel_free(k: *mut AttendKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Parses and validates a program. On `Parse`, `line`/`col` (if non-null)
/// receive the error position, or 0 when it has none.
///
/// # Safety
/// `source` must be a NUL-terminated string; `line` and `col` null or writable.
#[no_mangle]
pub unsafe extern "C" fn attend_check_program(source: *const c_char, line: *mut u32, col: *mut u32) -> AttendStatus {
    guard(|| {
        let src = match text(source) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match load_cp(src) {
            Ok(_) => AttendStatus::Ok,
            Err(e) => {
                let (l, c) = e.location().map(|p| (p.line as u32, p.col as u32)).unwrap_or((0, 0));
                if !line.is_null() {
                    *line = l;
                }
                if !col.is_null() {
                    *col = c;
                }
                set_error(e.to_string());
                AttendStatus::Parse
            }
        }
    })
}

/// Adds (or replaces) a program in the kernel's library under its own name.
///
/// # Safety
/// `k` must be a live kernel handle and `source` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn attend_kernel_add_program(k: *mut AttendKernel, source: *const c_char) -> AttendStatus {
    guard(|| {
        let Some(k) = k.as_mut() else {
            set_error("null kernel");
            return AttendStatus::NullPointer;
        };
        let src = match text(source) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match load_cp(src) {
            Ok(p) => {
                k.library.insert(&p.name.clone(), p);
                AttendStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                AttendStatus::Parse
            }
        }
    })
}

/// Runs one trial of the task described by `task_toml`. On `Ok`, `*out`
/// holds a new trial handle; a trial that fails its task still returns `Ok`
/// (see [`attend_trial_success`]).
///
/// # Safety
/// `k` must be a live kernel handle, `task_toml` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn attend_run_trial(
    k: *const AttendKernel,
    task_toml: *const c_char,
    seed: u64,
    trial: u64,
    out: *mut *mut AttendTrial,
) -> AttendStatus {
    guard(|| {
        let (Some(k), false) = (k.as_ref(), out.is_null()) else {
            set_error("null kernel or output pointer");
            return AttendStatus::NullPointer;
        };
        let toml = match text(task_toml) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let spec = match TaskSpec::from_toml(toml) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return AttendStatus::Parse;
            }
        };
        match run_trial(&k.library, &spec, &k.hierarchy, &k.config, seed, trial) {
            Ok(result) => {
                let response = result.response.as_deref().and_then(|r| CString::new(r).ok());
                *out = Box::into_raw(Box::new(AttendTrial { result, response }));
                AttendStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                AttendStatus::Runtime
            }
        }
    })
}

/// # Safety
/// `t` must come from [`attend_run_trial`]. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn attend_trial_free(t: *mut AttendTrial) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live trial handle or null (false).
#[no_mangle]
pub unsafe extern "C" fn attend_trial_success(t: *const AttendTrial) -> bool {
    t.as_ref().is_some_and(|t| t.result.success)
}

/// # Safety
/// `t` must be a live trial handle or null (false).
#[no_mangle]
pub unsafe extern "C" fn attend_trial_correct(t: *const AttendTrial) -> bool {
    t.as_ref().is_some_and(|t| t.result.correct)
}

/// Cycles from stimulus onset to the response.
///
/// # Safety
/// `t` must be a live trial handle or null (0).
#[no_mangle]
pub unsafe extern "C" fn attend_trial_cycles(t: *const AttendTrial) -> u64 {
    t.as_ref().map_or(0, |t| t.result.cycles)
}

/// Borrowed response text, or null when the trial gave none.
///
/// # Safety
/// `t` must be a live trial handle or null.
#[no_mangle]
pub unsafe extern "C" fn attend_trial_response(t: *const AttendTrial) -> *const c_char {
    t.as_ref()
        .and_then(|t| t.response.as_ref())
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Report as JSON. Free with [`attend_string_free`].
///
/// # Safety
/// `t` must be a live trial handle or null (returns null).
#[no_mangle]
pub unsafe extern "C" fn attend_trial_report_json(t: *const AttendTrial) -> *mut c_char {
    t.as_ref().map_or(ptr::null_mut(), |t| owned(t.result.to_json()))
}

/// Control-signal trace as CSV. Free with [`attend_string_free`].
///
/// # Safety
/// `t` must be a live trial handle or null (returns null).
#[no_mangle]
pub unsafe extern "C" fn attend_trial_trace_csv(t: *const AttendTrial) -> *mut c_char {
    t.as_ref()
        .map_or(ptr::null_mut(), |t| owned(emit_trace(&t.result.trace, TraceFormat::Csv)))
}

/// Fixation log as CSV. Free with [`attend_string_free`].
///
/// # Safety
/// `t` must be a live trial handle or null (returns null).
#[no_mangle]
pub unsafe extern "C" fn attend_trial_fixations_csv(t: *const AttendTrial) -> *mut c_char {
    t.as_ref()
        .map_or(ptr::null_mut(), |t| owned(fixations_csv(&t.result.fixation_log)))
}

/// Claims table as CSV, optionally filtered by id substring (`filter` may be
/// null). Free with [`attend_string_free`]; null on a non-UTF-8 filter.
///
/// # Safety
/// `filter` must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn attend_oracle_csv(filter: *const c_char) -> *mut c_char {
    let f = if filter.is_null() {
        None
    } else {
        match text(filter) {
            Ok(s) => Some(s),
            Err(_) => return ptr::null_mut(),
        }
    };
    owned(claims_csv(&claims_filtered(f)))
}
