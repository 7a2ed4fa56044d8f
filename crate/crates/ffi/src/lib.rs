//! C ABI for the ddgpce library: load or fit surrogate archives, evaluate
//! them on batches of points, and estimate VaR/CVaR from output samples.
//!
//! Conventions:
//! - Every fallible call returns a [`DdgpceStatus`]; `DDGPCE_STATUS_OK` is 0.
//! - On failure, a thread-local message is retrievable with
//!   [`ddgpce_last_error`].
//! - Surrogates are opaque handles created by the `load`/`fit`/`bifit`
//!   constructors and released with [`ddgpce_surrogate_free`].
//! - Point batches are row-major `rows x dimension` double arrays.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use libc::{c_char, c_double, c_int, size_t};

use ddgpce::archive::{LoadedSurrogate, SurrogateArchive};
use ddgpce::error::Error;
use ddgpce::pipeline;
use ddgpce::risk::{var_cvar, Estimator};

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DdgpceStatus {
    Ok = 0,
    InvalidArgument = 1,
    ConfigError = 2,
    ModelError = 3,
    NumericalError = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(error: &Error) -> DdgpceStatus {
    match error.exit_code() {
        2 => DdgpceStatus::ConfigError,
        3 => DdgpceStatus::ModelError,
        4 => DdgpceStatus::NumericalError,
        _ => DdgpceStatus::InvalidArgument,
    }
}

fn fail(error: Error) -> DdgpceStatus {
    let status = status_of(&error);
    set_error(&error.to_string());
    status
}

fn invalid(message: &str) -> DdgpceStatus {
    set_error(message);
    DdgpceStatus::InvalidArgument
}

fn guarded<F: FnOnce() -> DdgpceStatus>(body: F) -> DdgpceStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DdgpceStatus::Panic
        }
    }
}

/// Opaque surrogate handle: the archive plus its evaluable form.
pub struct DdgpceSurrogate {
    archive: SurrogateArchive,
    loaded: LoadedSurrogate,
}

unsafe fn path_from(ptr: *const c_char) -> Option<&'static Path> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok().map(Path::new)
}

fn install(
    archive: SurrogateArchive,
    out: *mut *mut DdgpceSurrogate,
) -> DdgpceStatus {
    match archive.instantiate() {
        Ok(loaded) => {
            let handle = Box::new(DdgpceSurrogate { archive, loaded });
            unsafe { *out = Box::into_raw(handle) };
            DdgpceStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn ddgpce_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Copy the last error message for this thread into `buffer` (truncated to
/// `capacity - 1` bytes, always NUL terminated when capacity > 0). Returns
/// the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buffer` must point to at least `capacity` writable bytes, or be null
/// (null is allowed for querying the length).
#[no_mangle]
pub unsafe extern "C" fn ddgpce_last_error(buffer: *mut c_char, capacity: size_t) -> size_t {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let copy = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buffer.cast(), copy);
            *buffer.add(copy) = 0;
        }
        bytes.len()
    })
}

/// Load a surrogate archive (single- or bi-fidelity) from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_surrogate_load(
    path: *const c_char,
    out: *mut *mut DdgpceSurrogate,
) -> DdgpceStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out pointer is null");
        }
        let Some(path) = path_from(path) else {
            return invalid("path is null or not UTF-8");
        };
        match SurrogateArchive::load(path) {
            Ok(archive) => install(archive, out),
            Err(e) => fail(e),
        }
    })
}

/// Run the fit pipeline described by a configuration file and return the
/// fitted surrogate.
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_fit_config_file(
    config_path: *const c_char,
    out: *mut *mut DdgpceSurrogate,
) -> DdgpceStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out pointer is null");
        }
        let Some(path) = path_from(config_path) else {
            return invalid("config path is null or not UTF-8");
        };
        let base_dir = path.parent().unwrap_or(Path::new("."));
        let config = match ddgpce::config::PipelineConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match pipeline::cmd_fit(&config, base_dir) {
            Ok(outcome) => install(outcome.archive, out),
            Err(e) => fail(e),
        }
    })
}

/// Run the bi-fidelity pipeline described by a configuration file and return
/// the corrected surrogate.
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_bifit_config_file(
    config_path: *const c_char,
    out: *mut *mut DdgpceSurrogate,
) -> DdgpceStatus {
    guarded(|| {
        if out.is_null() {
            return invalid("out pointer is null");
        }
        let Some(path) = path_from(config_path) else {
            return invalid("config path is null or not UTF-8");
        };
        let base_dir = path.parent().unwrap_or(Path::new("."));
        let config = match ddgpce::config::PipelineConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match pipeline::cmd_bifit(&config, base_dir) {
            Ok(outcome) => install(outcome.archive, out),
            Err(e) => fail(e),
        }
    })
}

/// Input dimension of a surrogate; 0 for a null handle.
///
/// # Safety
/// `surrogate` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_surrogate_dimension(
    surrogate: *const DdgpceSurrogate,
) -> size_t {
    if surrogate.is_null() {
        return 0;
    }
    (*surrogate).loaded.dimension()
}

/// Whether the surrogate carries a bi-fidelity correction link.
///
/// # Safety
/// `surrogate` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_surrogate_is_bifidelity(
    surrogate: *const DdgpceSurrogate,
) -> c_int {
    if surrogate.is_null() {
        return 0;
    }
    matches!((*surrogate).loaded, LoadedSurrogate::BiFidelity(_)) as c_int
}

/// Evaluate a surrogate on `rows` points of dimension `dimension`
/// (row-major), writing one output per row.
///
/// # Safety
/// `points` must hold `rows * dimension` doubles and `out` `rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_surrogate_evaluate(
    surrogate: *const DdgpceSurrogate,
    points: *const c_double,
    rows: size_t,
    dimension: size_t,
    out: *mut c_double,
) -> DdgpceStatus {
    guarded(|| {
        if surrogate.is_null() || points.is_null() || out.is_null() {
            return invalid("null pointer argument");
        }
        let handle = &*surrogate;
        if dimension != handle.loaded.dimension() {
            return invalid(&format!(
                "dimension {dimension} does not match the surrogate dimension {}",
                handle.loaded.dimension()
            ));
        }
        if rows == 0 {
            return DdgpceStatus::Ok;
        }
        let flat = std::slice::from_raw_parts(points, rows * dimension);
        match handle.loaded.evaluate_rows(flat, rows) {
            Ok(values) => {
                std::ptr::copy_nonoverlapping(values.as_ptr(), out, rows);
                DdgpceStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Save a surrogate handle back to a JSON archive.
///
/// # Safety
/// `surrogate` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_surrogate_save(
    surrogate: *const DdgpceSurrogate,
    path: *const c_char,
) -> DdgpceStatus {
    guarded(|| {
        if surrogate.is_null() {
            return invalid("surrogate handle is null");
        }
        let Some(path) = path_from(path) else {
            return invalid("path is null or not UTF-8");
        };
        match (*surrogate).archive.save(path) {
            Ok(()) => DdgpceStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Release a surrogate handle. Null is a no-op.
///
/// # Safety
/// `surrogate` must be a handle returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_surrogate_free(surrogate: *mut DdgpceSurrogate) {
    if !surrogate.is_null() {
        drop(Box::from_raw(surrogate));
    }
}

/// Estimate VaR and CVaR from output samples with uniform probabilities.
/// `estimator` is 0 for the shifted-positive-part form, 1 for the
/// tail-indicator form.
///
/// # Safety
/// `values` must hold `length` doubles; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ddgpce_var_cvar(
    values: *const c_double,
    length: size_t,
    beta: c_double,
    estimator: c_int,
    out_var: *mut c_double,
    out_cvar: *mut c_double,
) -> DdgpceStatus {
    guarded(|| {
        if values.is_null() || out_var.is_null() || out_cvar.is_null() {
            return invalid("null pointer argument");
        }
        let estimator = match estimator {
            0 => Estimator::Rockafellar,
            1 => Estimator::Indicator,
            other => return invalid(&format!("unknown estimator code {other}")),
        };
        let slice = std::slice::from_raw_parts(values, length);
        match var_cvar(slice, beta, estimator) {
            Ok(estimate) => {
                *out_var = estimate.var;
                *out_cvar = estimate.cvar;
                DdgpceStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn write_config(dir: &Path) -> CString {
        let path = dir.join("config.json");
        std::fs::write(
            &path,
            r#"{
                "input_model": {
                    "marginals": [ {"kind": "normal", "mean": 0.0, "std": 1.0, "repeat": 2} ],
                    "correlation": {"kind": "identity"}
                },
                "basis": {"interaction_order": 1, "degree": 1},
                "samples": {"risk": 2000, "design": 20, "moments": 500},
                "betas": [0.9],
                "seed": 7,
                "model": {"kind": "linear", "weights": [1.0, 2.0]}
            }"#,
        )
        .unwrap();
        CString::new(path.to_str().unwrap()).unwrap()
    }

    #[test]
    fn fit_evaluate_save_load_cycle() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path());
        let mut handle: *mut DdgpceSurrogate = std::ptr::null_mut();
        let status = unsafe { ddgpce_fit_config_file(config.as_ptr(), &mut handle) };
        assert_eq!(status, DdgpceStatus::Ok);
        assert!(!handle.is_null());
        assert_eq!(unsafe { ddgpce_surrogate_dimension(handle) }, 2);
        assert_eq!(unsafe { ddgpce_surrogate_is_bifidelity(handle) }, 0);

        let points = [0.5f64, -1.0, 2.0, 0.25];
        let mut out = [0.0f64; 2];
        let status = unsafe {
            ddgpce_surrogate_evaluate(handle, points.as_ptr(), 2, 2, out.as_mut_ptr())
        };
        assert_eq!(status, DdgpceStatus::Ok);
        assert!((out[0] - (0.5 - 2.0)).abs() < 1e-8, "{}", out[0]);
        assert!((out[1] - 2.5).abs() < 1e-8, "{}", out[1]);

        let saved = dir.path().join("archive.json");
        let saved_c = CString::new(saved.to_str().unwrap()).unwrap();
        assert_eq!(
            unsafe { ddgpce_surrogate_save(handle, saved_c.as_ptr()) },
            DdgpceStatus::Ok
        );
        unsafe { ddgpce_surrogate_free(handle) };

        let mut reloaded: *mut DdgpceSurrogate = std::ptr::null_mut();
        assert_eq!(
            unsafe { ddgpce_surrogate_load(saved_c.as_ptr(), &mut reloaded) },
            DdgpceStatus::Ok
        );
        let mut out2 = [0.0f64; 2];
        unsafe {
            ddgpce_surrogate_evaluate(reloaded, points.as_ptr(), 2, 2, out2.as_mut_ptr());
            ddgpce_surrogate_free(reloaded);
        }
        assert_eq!(out, out2);
    }

    #[test]
    fn wrong_dimension_is_invalid_argument_with_message() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path());
        let mut handle: *mut DdgpceSurrogate = std::ptr::null_mut();
        unsafe { ddgpce_fit_config_file(config.as_ptr(), &mut handle) };
        let points = [1.0f64; 3];
        let mut out = [0.0f64; 1];
        let status = unsafe {
            ddgpce_surrogate_evaluate(handle, points.as_ptr(), 1, 3, out.as_mut_ptr())
        };
        assert_eq!(status, DdgpceStatus::InvalidArgument);
        let mut buffer = vec![0i8; 256];
        let len = unsafe { ddgpce_last_error(buffer.as_mut_ptr(), buffer.len()) };
        assert!(len > 0);
        let message = unsafe { CStr::from_ptr(buffer.as_ptr()) }
            .to_string_lossy()
            .into_owned();
        assert!(message.contains("dimension"), "{message}");
        unsafe { ddgpce_surrogate_free(handle) };
    }

    #[test]
    fn risk_estimation_matches_the_hand_case() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let (mut var, mut cvar) = (0.0f64, 0.0f64);
        let status = unsafe {
            ddgpce_var_cvar(values.as_ptr(), values.len(), 0.95, 0, &mut var, &mut cvar)
        };
        assert_eq!(status, DdgpceStatus::Ok);
        assert_eq!(var, 95.0);
        assert_eq!(cvar, 98.0);
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let missing = CString::new("/definitely/not/here.json").unwrap();
        let mut handle: *mut DdgpceSurrogate = std::ptr::null_mut();
        let status = unsafe { ddgpce_surrogate_load(missing.as_ptr(), &mut handle) };
        assert_eq!(status, DdgpceStatus::ConfigError);
        assert!(handle.is_null());
    }

    #[test]
    fn null_arguments_are_rejected() {
        let status = unsafe {
            ddgpce_var_cvar(std::ptr::null(), 0, 0.9, 0, std::ptr::null_mut(), std::ptr::null_mut())
        };
        assert_eq!(status, DdgpceStatus::InvalidArgument);
        assert_eq!(
            unsafe { ddgpce_surrogate_load(std::ptr::null(), std::ptr::null_mut()) },
            DdgpceStatus::InvalidArgument
        );
    }

    #[test]
    fn generated_header_exposes_the_api() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ddgpce.h");
        let text = std::fs::read_to_string(header).expect("header generated by build.rs");
        for symbol in [
            "ddgpce_surrogate_load",
            "ddgpce_fit_config_file",
            "ddgpce_bifit_config_file",
            "ddgpce_surrogate_evaluate",
            "ddgpce_surrogate_free",
            "ddgpce_var_cvar",
            "ddgpce_last_error",
            "DDGPCE_STATUS_OK",
        ] {
            assert!(text.contains(symbol), "header missing {symbol}");
        }
    }
}
