//! C ABI for the chemofront simulator.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns a [`CfStatus`];
//! the message of the last failure on the calling thread is available from
//! [`cf_last_error_message`]. Strings returned by the library are released
//! with [`cf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chemofront::analysis::predicted_speed;
use chemofront::harness::{certify, run_scenario, write_outcome, Outcome, ScenarioConfig, Verdict};
use chemofront::initial::BumpSpec;
use chemofront::{Error, ModelParams};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    NotFound = 6,
    Panic = 7,
}

/// Verdict of a finished scenario.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfVerdict {
    Pass = 0,
    Fail = 1,
    Error = 2,
}

/// A parsed and validated scenario configuration.
pub struct CfConfig {
    inner: ScenarioConfig,
}

/// Report and artefacts of one scenario run.
pub struct CfOutcome {
    inner: Outcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> CfStatus {
    match err {
        Error::Config(_)
        | Error::InvalidParams(_)
        | Error::InvalidGrid(_)
        | Error::LengthMismatch { .. }
        | Error::InvalidInitialData(_)
        | Error::InvalidControls(_)
        | Error::Hypothesis(_) => CfStatus::Config,
        Error::Io(_) => CfStatus::Io,
        _ => CfStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), CfStatus>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside chemofront");
            CfStatus::Panic
        }
    }
}

fn fail(err: Error) -> CfStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, CfStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(CfStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        CfStatus::InvalidUtf8
    })
}

fn null_error() -> CfStatus {
    set_error("null pointer argument");
    CfStatus::NullPointer
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_config_from_toml(toml: *const c_char, out: *mut *mut CfConfig) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error());
        }
        *out = ptr::null_mut();
        let text = read_str(toml)?;
        let inner = ScenarioConfig::from_toml_str(text).map_err(fail)?;
        inner.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(CfConfig { inner }));
        Ok(())
    })
}

/// Applies a dotted `key = value` override, e.g. `grid.cells` = `800`.
///
/// # Safety
/// `config` must come from [`cf_config_from_toml`]; `key` and `value` must
/// be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn cf_config_set(config: *mut CfConfig, key: *const c_char, value: *const c_char) -> CfStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(null_error)?;
        let (k, v) = (read_str(key)?, read_str(value)?);
        let next = cfg
            .inner
            .with_overrides(&[(k.to_string(), v.to_string())])
            .map_err(fail)?;
        next.validate().map_err(fail)?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `config` must come from [`cf_config_from_toml`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_config_free(config: *mut CfConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the configured scenario. Numerical failures during the run yield
/// an outcome with verdict `CF_VERDICT_ERROR`, not a failing status.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_run(config: *const CfConfig, out: *mut *mut CfOutcome) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error());
        }
        *out = ptr::null_mut();
        let cfg = config.as_ref().ok_or_else(null_error)?;
        let inner = run_scenario(&cfg.inner).map_err(fail)?;
        *out = Box::into_raw(Box::new(CfOutcome { inner }));
        Ok(())
    })
}

/// Certificates from the initial data only, without running the solver.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_certify(config: *const CfConfig, out: *mut *mut CfOutcome) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error());
        }
        *out = ptr::null_mut();
        let cfg = config.as_ref().ok_or_else(null_error)?;
        let report = certify(&cfg.inner).map_err(fail)?;
        *out = Box::into_raw(Box::new(CfOutcome {
            inner: Outcome { report, run: None },
        }));
        Ok(())
    })
}

/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_outcome_verdict(outcome: *const CfOutcome) -> CfVerdict {
    match outcome.as_ref().map(|o| o.inner.report.verdict) {
        Some(Verdict::Pass) => CfVerdict::Pass,
        Some(Verdict::Fail) => CfVerdict::Fail,
        _ => CfVerdict::Error,
    }
}

/// Looks up a named metric of the report.
///
/// # Safety
/// `outcome` must be a live handle, `name` a NUL-terminated string and
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_outcome_metric(outcome: *const CfOutcome, name: *const c_char, value: *mut f64) -> CfStatus {
    guard(|| {
        let o = outcome.as_ref().ok_or_else(null_error)?;
        if value.is_null() {
            return Err(null_error());
        }
        let key = read_str(name)?;
        match o.inner.report.metrics.get(key) {
            Some(v) => {
                *value = *v;
                Ok(())
            }
            None => {
                set_error(format!("no metric named `{key}`"));
                Err(CfStatus::NotFound)
            }
        }
    })
}

/// Number of checks and how many of them failed.
///
/// # Safety
/// `outcome` must be a live handle; `total` and `failed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_outcome_check_counts(outcome: *const CfOutcome, total: *mut usize, failed: *mut usize) -> CfStatus {
    guard(|| {
        let o = outcome.as_ref().ok_or_else(null_error)?;
        let checks = &o.inner.report.checks;
        if let Some(t) = total.as_mut() {
            *t = checks.len();
        }
        if let Some(f) = failed.as_mut() {
            *f = checks.iter().filter(|c| !c.passed).count();
        }
        Ok(())
    })
}

/// The report as JSON. Release the string with [`cf_string_free`].
///
/// # Safety
/// `outcome` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_outcome_report_json(outcome: *const CfOutcome, out: *mut *mut c_char) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error());
        }
        *out = ptr::null_mut();
        let o = outcome.as_ref().ok_or_else(null_error)?;
        let json = o.inner.report.to_json().map_err(fail)?;
        *out = into_c_string(json);
        Ok(())
    })
}

/// Writes `trace.csv`, `snapshots/` and `report.json` into `dir`.
///
/// # Safety
/// `outcome` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn cf_outcome_write(outcome: *const CfOutcome, dir: *const c_char) -> CfStatus {
    guard(|| {
        let o = outcome.as_ref().ok_or_else(null_error)?;
        let d = read_str(dir)?;
        write_outcome(Path::new(d), &o.inner).map_err(fail)
    })
}

/// # Safety
/// `outcome` must come from [`cf_run`] or [`cf_certify`], or be NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_outcome_free(outcome: *mut CfOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Initial front speed `R₀(2m/(m−1) K₀^{m−1} − χμ)` of the canonical bump.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_predicted_speed(m: f64, chi: f64, k0: f64, r0: f64, mu: f64, out: *mut f64) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_error());
        }
        let params = ModelParams::line(m, chi).map_err(fail)?;
        let spec = BumpSpec::canonical(&params, k0, r0, mu, r0 / 10.0);
        *out = predicted_speed(&params, &spec).map_err(fail)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Config("x".into())), CfStatus::Config);
        assert_eq!(status_of(&Error::Io("x".into())), CfStatus::Io);
        assert_eq!(status_of(&Error::TooFewSamples { needed: 2, got: 0 }), CfStatus::Numerical);
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(cf_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
