//! C ABI for mctruth.
//!
//! Every fallible function returns an [`MctStatus`]. On failure the message is
//! available from [`mct_last_error`] on the same thread until the next call.
//! Strings returned through out-parameters are owned by the caller and must be
//! released with [`mct_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mctruth::config::{parse_config, parse_config_str, Format, RunConfig};
use mctruth::dgm::expit;
use mctruth::oracle::{quadrature_psi, LogisticNormalModel, QuadratureSpec};
use mctruth::report::{execute, Command};
use mctruth::Error;

/// Status codes. Non-zero values other than the last two match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MctStatus {
    Ok = 0,
    ConfigError = 2,
    ValidationFailure = 3,
    NumericalError = 4,
    IoError = 5,
    InvalidArgument = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MctCommand {
    Truth = 0,
    Oracle = 1,
    Diagnose = 2,
    Simstudy = 3,
    Validate = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MctFormat {
    Json = 0,
    Csv = 1,
}

/// Opaque parsed run configuration.
pub struct MctConfig {
    inner: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> MctStatus {
    match err.exit_code() {
        2 => MctStatus::ConfigError,
        3 => MctStatus::ValidationFailure,
        5 => MctStatus::IoError,
        _ => MctStatus::NumericalError,
    }
}

fn fail(err: Error) -> MctStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn invalid(msg: &str) -> MctStatus {
    set_error(msg);
    MctStatus::InvalidArgument
}

fn guard(f: impl FnOnce() -> MctStatus) -> MctStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            MctStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, MctStatus> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

/// Parses a TOML configuration file. Relative source paths resolve against the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mct_config_from_file(path: *const c_char, out: *mut *mut MctConfig) -> MctStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        *out = ptr::null_mut();
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match parse_config(Path::new(path)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(MctConfig { inner: cfg }));
                MctStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses configuration text. `base_dir` may be null (current directory).
///
/// # Safety
/// `text` and a non-null `base_dir` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mct_config_from_str(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut MctConfig,
) -> MctStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        *out = ptr::null_mut();
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let base = if base_dir.is_null() {
            "."
        } else {
            match read_str(base_dir, "base_dir") {
                Ok(b) => b,
                Err(s) => return s,
            }
        };
        match parse_config_str(text, Path::new(base)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(MctConfig { inner: cfg }));
                MctStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `config` must come from `mct_config_from_*` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mct_config_free(config: *mut MctConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Overrides the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mct_config_set_seed(config: *mut MctConfig, master_seed: u64) -> MctStatus {
    guard(|| match config.as_mut() {
        Some(c) => {
            c.inner.seed.master_seed = master_seed;
            MctStatus::Ok
        }
        None => invalid("config is null"),
    })
}

/// Runs a command and returns the rendered report in `*out_report`.
///
/// A failed `Validate` returns `ValidationFailure` and still sets the report.
///
/// # Safety
/// `config` must be a live handle; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mct_run(
    config: *const MctConfig,
    command: MctCommand,
    format: MctFormat,
    out_report: *mut *mut c_char,
) -> MctStatus {
    guard(|| {
        if out_report.is_null() {
            return invalid("out_report is null");
        }
        *out_report = ptr::null_mut();
        let Some(cfg) = config.as_ref() else {
            return invalid("config is null");
        };
        let command = match command {
            MctCommand::Truth => Command::Truth,
            MctCommand::Oracle => Command::Oracle,
            MctCommand::Diagnose => Command::Diagnose,
            MctCommand::Simstudy => Command::Simstudy,
            MctCommand::Validate => Command::Validate,
        };
        let format = match format {
            MctFormat::Json => Format::Json,
            MctFormat::Csv => Format::Csv,
        };
        let report = match execute(command, &cfg.inner) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let text = match report.render(format) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        *out_report = CString::new(text).expect("reports contain no NUL").into_raw();
        if report.exit_code() == 3 {
            set_error("model specification is invalid");
            return MctStatus::ValidationFailure;
        }
        MctStatus::Ok
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn mct_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Logistic function. Non-finite input is a `NumericalError`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mct_expit(x: f64, out: *mut f64) -> MctStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        match expit(x) {
            Ok(v) => {
                *out = v;
                MctStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Marginal odds ratio of logit P(Y=1|A,C) = b0 + b1*A + b2*C with C ~ N(mu, sigma^2),
/// contrasting A=1 with A=0, by Gauss-Hermite quadrature with `nodes` points.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mct_quadrature_psi(
    b0: f64,
    b1: f64,
    b2: f64,
    mu: f64,
    sigma: f64,
    nodes: u32,
    out: *mut f64,
) -> MctStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let model = LogisticNormalModel {
            beta0: b0,
            beta1: b1,
            beta2: b2,
            mu,
            sigma,
        };
        let spec = QuadratureSpec::GaussHermite { nodes: nodes as usize };
        match quadrature_psi(&model, &spec) {
            Ok(v) => {
                *out = v;
                MctStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn mct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
