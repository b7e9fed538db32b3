//! C ABI over the `richness` crate.
//!
//! Tables and simulation reports are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`RichnessStatus`]; on a
//! non-OK status [`richness_last_error_message`] describes the failure on the
//! calling thread. Strings returned by the library are released with
//! [`richness_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use richness::estimators::EstimatorKind;
use richness::freqtab::{parse_frequency_table, FrequencyCountTable};
use richness::simlab::{run_replications, SimulationConfig, SimulationReport};
use richness::Error;

/// Opaque frequency count table.
pub struct RichnessTable(FrequencyCountTable);

/// Opaque simulation report.
pub struct RichnessReport(SimulationReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RichnessStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfig = 3,
    EstimationFailed = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RichnessEstimator {
    Nof1 = 0,
    Breakaway = 1,
    Chao1 = 2,
}

impl From<RichnessEstimator> for EstimatorKind {
    fn from(e: RichnessEstimator) -> Self {
        match e {
            RichnessEstimator::Nof1 => EstimatorKind::Nof1,
            RichnessEstimator::Breakaway => EstimatorKind::Breakaway,
            RichnessEstimator::Chao1 => EstimatorKind::Chao1,
        }
    }
}

pub const RICHNESS_MASK_NOF1: u32 = 1;
pub const RICHNESS_MASK_BREAKAWAY: u32 = 2;
pub const RICHNESS_MASK_CHAO1: u32 = 4;

/// One richness estimate. Fields that do not apply are NaN (`f1_hat`) or
/// zero with `has_model = 0` (`p`, `q`).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichnessEstimate {
    pub c_hat: f64,
    pub se: f64,
    pub f0_hat: f64,
    pub f1_hat: f64,
    pub has_model: i32,
    pub p: u32,
    pub q: u32,
    /// Number of warnings attached to the estimate.
    pub warning_count: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichnessSimConfig {
    pub true_richness: u64,
    pub size: u64,
    pub prob: f64,
    /// Percentage change applied to the observed singleton count.
    pub chimeric_rate: f64,
    pub reps: u64,
    pub seed: u64,
    pub trim: f64,
    /// Bitwise OR of `RICHNESS_MASK_*`.
    pub estimator_mask: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let c = CString::new(message.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_for(e: &Error) -> RichnessStatus {
    match e {
        Error::Parse { .. }
        | Error::DuplicateCount { .. }
        | Error::InvalidAbundance { .. }
        | Error::Empty
        | Error::DegenerateSample => RichnessStatus::InvalidInput,
        Error::InvalidConfig(_) => RichnessStatus::InvalidConfig,
        _ => RichnessStatus::EstimationFailed,
    }
}

/// Runs `f`, recording errors and converting panics into [`RichnessStatus::Panic`].
fn guard<F>(f: F) -> RichnessStatus
where
    F: FnOnce() -> Result<(), (RichnessStatus, String)>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RichnessStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RichnessStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RichnessStatus, String) {
    (status_for(&e), e.to_string())
}

fn null(what: &str) -> (RichnessStatus, String) {
    (RichnessStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(
    ptr: *const T,
    len: usize,
    what: &str,
) -> Result<&'a [T], (RichnessStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn into_handle<T>(value: T, out: *mut *mut T) {
    // SAFETY: callers check `out` for null before building the value.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Builds a table from parallel arrays of count values `js` and frequencies `fs`.
///
/// # Safety
/// `js` and `fs` must each be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn richness_table_from_counts(
    js: *const u64,
    fs: *const u64,
    len: usize,
    out: *mut *mut RichnessTable,
) -> RichnessStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let js = slice(js, len, "js")?;
        let fs = slice(fs, len, "fs")?;
        let table = FrequencyCountTable::from_pairs(js.iter().copied().zip(fs.iter().copied()))
            .map_err(lib_err)?;
        into_handle(RichnessTable(table), out);
        Ok(())
    })
}

/// Builds a table from one abundance per observed taxon.
///
/// # Safety
/// `abundances` must be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn richness_table_from_abundances(
    abundances: *const u64,
    len: usize,
    out: *mut *mut RichnessTable,
) -> RichnessStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = slice(abundances, len, "abundances")?;
        let table = FrequencyCountTable::from_abundances(a).map_err(lib_err)?;
        into_handle(RichnessTable(table), out);
        Ok(())
    })
}

/// Parses `j f_j` lines (tab, comma or space separated).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn richness_table_parse(
    text: *const c_char,
    out: *mut *mut RichnessTable,
) -> RichnessStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|_| {
            (
                RichnessStatus::InvalidInput,
                "text is not valid UTF-8".to_string(),
            )
        })?;
        let parsed = parse_frequency_table(text).map_err(lib_err)?;
        into_handle(RichnessTable(parsed.value), out);
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn richness_table_free(table: *mut RichnessTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of observed taxa; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn richness_table_observed(table: *const RichnessTable) -> u64 {
    table.as_ref().map_or(0, |t| t.0.observed_richness())
}

/// `f_j`, or 0 when absent or for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn richness_table_get(table: *const RichnessTable, j: u64) -> u64 {
    table.as_ref().map_or(0, |t| t.0.get(j))
}

/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn richness_estimate(
    table: *const RichnessTable,
    estimator: RichnessEstimator,
    out: *mut RichnessEstimate,
) -> RichnessStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let est = EstimatorKind::from(estimator)
            .estimate(&table.0)
            .map_err(lib_err)?;
        let (has_model, p, q) = est
            .degrees()
            .map_or((0, 0, 0), |(p, q)| (1, p as u32, q as u32));
        *out = RichnessEstimate {
            c_hat: est.c_hat,
            se: est.se,
            f0_hat: est.f0_hat,
            f1_hat: est.f1_hat.unwrap_or(f64::NAN),
            has_model,
            p,
            q,
            warning_count: est.warnings.len() as u32,
        };
        Ok(())
    })
}

fn kinds_from_mask(mask: u32) -> Vec<EstimatorKind> {
    [
        (RICHNESS_MASK_NOF1, EstimatorKind::Nof1),
        (RICHNESS_MASK_BREAKAWAY, EstimatorKind::Breakaway),
        (RICHNESS_MASK_CHAO1, EstimatorKind::Chao1),
    ]
    .into_iter()
    .filter(|(bit, _)| mask & bit != 0)
    .map(|(_, k)| k)
    .collect()
}

/// Runs a replicated simulation. Output is deterministic in `config`.
///
/// # Safety
/// `config` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn richness_simulate(
    config: *const RichnessSimConfig,
    out: *mut *mut RichnessReport,
) -> RichnessStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = SimulationConfig {
            true_richness: c.true_richness,
            size: c.size,
            prob: c.prob,
            chimeric_rate: c.chimeric_rate,
            reps: c.reps as usize,
            seed: c.seed,
            estimators: kinds_from_mask(c.estimator_mask),
            trim: c.trim,
        };
        let report = run_replications(&cfg).map_err(lib_err)?;
        into_handle(RichnessReport(report), out);
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn richness_report_free(report: *mut RichnessReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Report as JSON; null on failure. Free with [`richness_string_free`].
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn richness_report_to_json(report: *const RichnessReport) -> *mut c_char {
    clear_error();
    match report.as_ref() {
        Some(r) => to_c_string(r.0.to_json().to_string()),
        None => {
            set_error("report is null");
            ptr::null_mut()
        }
    }
}

/// Report as CSV with `precision` decimals; null on failure.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn richness_report_to_csv(
    report: *const RichnessReport,
    precision: u32,
) -> *mut c_char {
    clear_error();
    match report.as_ref() {
        Some(r) => to_c_string(r.0.to_csv(precision as usize)),
        None => {
            set_error("report is null");
            ptr::null_mut()
        }
    }
}

/// Named statistic for one estimator, NaN when absent.
///
/// # Safety
/// `report` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn richness_report_statistic(
    report: *const RichnessReport,
    estimator: RichnessEstimator,
    name: *const c_char,
) -> f64 {
    let (Some(r), false) = (report.as_ref(), name.is_null()) else {
        return f64::NAN;
    };
    let Ok(name) = CStr::from_ptr(name).to_str() else {
        return f64::NAN;
    };
    r.0.summary(estimator.into())
        .and_then(|s| s.statistic(name))
        .unwrap_or(f64::NAN)
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn richness_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn richness_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn richness_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
