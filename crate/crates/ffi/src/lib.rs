//! C ABI over `mom-tournament`.
//!
//! Every fallible function returns an [`MtStatus`]; on failure the message is
//! available from [`mt_last_error_message`] on the calling thread. Handles are
//! opaque and must be released with their `*_free` function. Strings returned
//! through `out` parameters are owned by the caller and released with
//! [`mt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mom_tournament::harness::{run_experiment_with_threads, to_csv_string, to_json_string, ExperimentConfig, ResultTable};
use mom_tournament::mom::median_of_means;
use mom_tournament::problems::MeanEstimationProblem;
use mom_tournament::samplers::adversarial_failure_probability;
use mom_tournament::tournament::{run_tournament, TournamentConfig};
use mom_tournament::{Error, FeasibleSet, HNorm, Scenario, ScenarioSample};
use nalgebra::DVector;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

/// Set in the flags of [`mt_mean_tournament`] when no champion won every home match.
pub const MT_FLAG_WINNERS_EMPTY: u32 = 1;
/// Set when there was no champion and the full-sample SAA was returned.
pub const MT_FLAG_CHAMPIONS_EMPTY: u32 = 2;

/// A validated experiment configuration.
pub struct MtExperiment {
    config: ExperimentConfig,
}

/// Results of a finished experiment.
pub struct MtResult {
    table: ResultTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(text).expect("nul bytes removed")));
}

fn status_of(e: &Error) -> MtStatus {
    match e {
        Error::Config { .. } | Error::Json(_) => MtStatus::Config,
        Error::Io(_) | Error::Csv(_) => MtStatus::Io,
        Error::NotPositiveDefinite(_) | Error::DegenerateNorm(_) | Error::NonFinite(_) => MtStatus::Numerical,
        _ => MtStatus::InvalidArgument,
    }
}

/// Runs `body`, mapping errors and panics to a status and the last-error slot.
fn guard(body: impl FnOnce() -> Result<(), (MtStatus, String)>) -> MtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MtStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside the library");
            MtStatus::Panic
        }
    }
}

fn lib<T>(r: mom_tournament::Result<T>) -> Result<T, (MtStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MtStatus, String) {
    (MtStatus::NullPointer, format!("`{what}` is null"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Median of `blocks` contiguous block means of `values[0..len]`.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn mt_median_of_means(values: *const f64, len: usize, blocks: usize, out: *mut f64) -> MtStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let values = std::slice::from_raw_parts(values, len);
        *out = lib(median_of_means(values, blocks))?;
        Ok(())
    })
}

/// Probability that the empirical mean of `n` two-point adversarial draws
/// misses the mean by at least `r`, with the law designed for `(n, r)`.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn mt_adversarial_failure_probability(n: usize, r: f64, out: *mut f64) -> MtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(adversarial_failure_probability(n, r))?;
        Ok(())
    })
}

/// Parses and validates a JSON experiment config.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mt_experiment_from_json(json: *const c_char, out: *mut *mut MtExperiment) -> MtStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(json).to_str().map_err(|e| (MtStatus::InvalidArgument, format!("config is not UTF-8: {e}")))?;
        let config = lib(ExperimentConfig::from_json(text))?;
        lib(config.validate())?;
        *out = Box::into_raw(Box::new(MtExperiment { config }));
        Ok(())
    })
}

/// Overrides the root seed of an experiment.
///
/// # Safety
/// `experiment` must be a live handle from [`mt_experiment_from_json`].
#[no_mangle]
pub unsafe extern "C" fn mt_experiment_set_seed(experiment: *mut MtExperiment, seed: u64) -> MtStatus {
    guard(|| {
        let experiment = experiment.as_mut().ok_or_else(|| null("experiment"))?;
        experiment.config.seed = seed;
        Ok(())
    })
}

/// Runs the experiment on `threads` workers (0: library default). Output does
/// not depend on the thread count.
///
/// # Safety
/// `experiment` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mt_experiment_run(experiment: *const MtExperiment, threads: usize, out: *mut *mut MtResult) -> MtStatus {
    guard(|| {
        let experiment = experiment.as_ref().ok_or_else(|| null("experiment"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let table = lib(run_experiment_with_threads(&experiment.config, (threads > 0).then_some(threads)))?;
        *out = Box::into_raw(Box::new(MtResult { table }));
        Ok(())
    })
}

/// Releases an experiment handle; null is ignored.
///
/// # Safety
/// `experiment` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mt_experiment_free(experiment: *mut MtExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Number of `(method, N, r)` cells in a result.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_result_cell_count(result: *const MtResult) -> usize {
    result.as_ref().map_or(0, |r| r.table.cells.len())
}

unsafe fn export_string(result: *const MtResult, out: *mut *mut c_char, render: fn(&ResultTable) -> mom_tournament::Result<String>) -> MtStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = lib(render(&result.table))?;
        *out = CString::new(text).map_err(|e| (MtStatus::Io, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// The cell table as CSV; free with [`mt_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn mt_result_to_csv(result: *const MtResult, out: *mut *mut c_char) -> MtStatus {
    export_string(result, out, to_csv_string)
}

/// The cell table as JSON; free with [`mt_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn mt_result_to_json(result: *const MtResult, out: *mut *mut c_char) -> MtStatus {
    export_string(result, out, to_json_string)
}

/// Releases a result handle; null is ignored.
///
/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mt_result_free(result: *mut MtResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Unconstrained mean estimation by tournament over `count` points of
/// dimension `dim` (row-major in `points`), Euclidean norm, `c_H = 1`.
/// Writes the selected point to `out[0..dim]` and fallback bits
/// (`MT_FLAG_*`) to `flags`, which may be null.
///
/// # Safety
/// `points` must hold `count * dim` doubles, `out` must have room for `dim`.
#[no_mangle]
pub unsafe extern "C" fn mt_mean_tournament(points: *const f64, count: usize, dim: usize, r: f64, sigma2: f64, out: *mut f64, flags: *mut u32) -> MtStatus {
    guard(|| {
        if points.is_null() {
            return Err(null("points"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            return Err((MtStatus::InvalidArgument, "`dim` must be positive".into()));
        }
        let len = count.checked_mul(dim).ok_or((MtStatus::InvalidArgument, "count * dim overflows".to_string()))?;
        let data = std::slice::from_raw_parts(points, len);
        let scenarios = data.chunks(dim).map(|row| Scenario::Point(DVector::from_column_slice(row))).collect();
        let sample = lib(ScenarioSample::new(scenarios, 0, "ffi"))?;
        let problem = lib(MeanEstimationProblem::new(dim, FeasibleSet::AllOfSpace))?;
        let config = TournamentConfig::new(r, sigma2, 1.0, HNorm::identity(dim));
        let report = lib(run_tournament(&problem, &sample, &config))?;
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(report.selected.as_vector().as_slice());
        if !flags.is_null() {
            *flags = u32::from(report.fallback.winners_empty) * MT_FLAG_WINNERS_EMPTY + u32::from(report.fallback.champions_empty) * MT_FLAG_CHAMPIONS_EMPTY;
        }
        Ok(())
    })
}
