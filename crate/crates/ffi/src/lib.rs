//! C ABI over the `bestpath` library.
//!
//! Every function returns a [`BpaStatus`]. On failure the message is kept
//! per thread and read with [`bpa_last_error_message`]. Handles are opaque
//! and must be released with their `_free` function. Strings handed out by
//! this library are released with [`bpa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bestpath::bpa::{run_bpa, BpaConfig, Method, Outcome, SelectionReport};
use bestpath::data::{load_csv, read_schema, MixedDataTable, NaPolicy};
use bestpath::forest::{forest_for_table, Forest};
use bestpath::format::to_json_string;
use bestpath::knn::KraskovConfig;
use bestpath::pairwise::{all_pairwise_scores, Criterion, VarianceMode};
use bestpath::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Data = 4,
    InvalidArgument = 5,
    UnknownVariable = 6,
    Numerical = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// A loaded data table.
pub struct BpaTable {
    table: MixedDataTable,
}

/// A forest learnt from a table.
pub struct BpaForest {
    forest: Forest,
}

/// The result of a selection run.
pub struct BpaReport {
    report: SelectionReport,
}

/// Options for [`bpa_select`]. Start from [`bpa_select_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpaSelectOptions {
    /// 0 for the entropy coefficient, 1 for adjusted R².
    pub method: u32,
    /// 0 for AIC, 1 for BIC.
    pub criterion: u32,
    /// 0 for a pooled group variance, 1 for per-group variances.
    pub variance: u32,
    pub alpha: f64,
    pub seed: u64,
    pub folds: u32,
    pub permutations: u32,
    pub k_neighbors: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> BpaStatus {
    match e.root() {
        Error::Io { .. } => BpaStatus::Io,
        Error::UnknownVariable(_) => BpaStatus::UnknownVariable,
        Error::InvalidArgument(_) => BpaStatus::InvalidArgument,
        Error::Numerical(_) | Error::RankDeficient(_) | Error::FoldTooSmall { .. } => BpaStatus::Numerical,
        _ => BpaStatus::Data,
    }
}

struct Failure(BpaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Run `f` at the boundary: record errors and turn panics into a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> BpaStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BpaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            BpaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(BpaStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BpaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or point to a live value of type `T`.
unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` must be null or writable.
unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(BpaStatus::InvalidArgument, "string contains NUL".into()))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bpa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bpa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bpa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a CSV file. `schema_path` may be null to infer variable kinds.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_table_load(
    csv_path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut BpaTable,
) -> BpaStatus {
    guard(|| {
        let data = str_arg(csv_path, "csv_path")?;
        let schema = if schema_path.is_null() {
            None
        } else {
            Some(read_schema(Path::new(str_arg(schema_path, "schema_path")?))?)
        };
        let table = load_csv(Path::new(data), schema.as_deref(), NaPolicy::DropRow)?;
        put(out, Box::into_raw(Box::new(BpaTable { table })), "out")
    })
}

/// # Safety
/// `table` must be null or a live handle from [`bpa_table_load`].
#[no_mangle]
pub unsafe extern "C" fn bpa_table_free(table: *mut BpaTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_table_shape(table: *const BpaTable, rows: *mut usize, vars: *mut usize) -> BpaStatus {
    guard(|| {
        let t = &ref_arg(table, "table")?.table;
        put(rows, t.n_rows(), "rows")?;
        put(vars, t.n_vars(), "vars")
    })
}

fn criterion(code: u32) -> Result<Criterion, Failure> {
    match code {
        0 => Ok(Criterion::Aic),
        1 => Ok(Criterion::Bic),
        _ => Err(Failure(BpaStatus::InvalidArgument, format!("unknown criterion {code}"))),
    }
}

fn variance(code: u32) -> Result<VarianceMode, Failure> {
    match code {
        0 => Ok(VarianceMode::Homogeneous),
        1 => Ok(VarianceMode::Heterogeneous),
        _ => Err(Failure(BpaStatus::InvalidArgument, format!("unknown variance mode {code}"))),
    }
}

/// Learn the forest of a table.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_forest_build(
    table: *const BpaTable,
    criterion_code: u32,
    variance_code: u32,
    out: *mut *mut BpaForest,
) -> BpaStatus {
    guard(|| {
        let t = &ref_arg(table, "table")?.table;
        let scores = all_pairwise_scores(t, variance(variance_code)?)?;
        let forest = forest_for_table(t, &scores, criterion(criterion_code)?);
        put(out, Box::into_raw(Box::new(BpaForest { forest })), "out")
    })
}

/// # Safety
/// `forest` must be null or a live handle from [`bpa_forest_build`].
#[no_mangle]
pub unsafe extern "C" fn bpa_forest_free(forest: *mut BpaForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}

/// # Safety
/// `forest` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_forest_n_edges(forest: *const BpaForest, out: *mut usize) -> BpaStatus {
    guard(|| put(out, ref_arg(forest, "forest")?.forest.edges().len(), "out"))
}

/// Forest as JSON; release with [`bpa_string_free`].
///
/// # Safety
/// `forest` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_forest_to_json(forest: *const BpaForest, out: *mut *mut c_char) -> BpaStatus {
    guard(|| {
        let json = to_json_string(&ref_arg(forest, "forest")?.forest.to_json())?;
        put(out, c_string(json)?, "out")
    })
}

/// Forest as a DOT graph; release with [`bpa_string_free`].
///
/// # Safety
/// `forest` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_forest_to_dot(forest: *const BpaForest, out: *mut *mut c_char) -> BpaStatus {
    guard(|| put(out, c_string(ref_arg(forest, "forest")?.forest.to_dot(None))?, "out"))
}

/// Defaults matching the command-line tool.
#[no_mangle]
pub extern "C" fn bpa_select_options_default() -> BpaSelectOptions {
    let d = BpaConfig::default();
    BpaSelectOptions {
        method: 0,
        criterion: 1,
        variance: 0,
        alpha: d.alpha,
        seed: d.seed,
        folds: d.folds as u32,
        permutations: d.kraskov.permutations as u32,
        k_neighbors: d.kraskov.k_neighbors as u32,
    }
}

fn config(opts: &BpaSelectOptions) -> Result<BpaConfig, Failure> {
    let method = match opts.method {
        0 => Method::Ec,
        1 => Method::R2,
        m => return Err(Failure(BpaStatus::InvalidArgument, format!("unknown method {m}"))),
    };
    Ok(BpaConfig {
        method,
        criterion: criterion(opts.criterion)?,
        variance_mode: variance(opts.variance)?,
        alpha: opts.alpha,
        seed: opts.seed,
        folds: opts.folds as usize,
        kraskov: KraskovConfig {
            permutations: opts.permutations as usize,
            k_neighbors: opts.k_neighbors as usize,
            ..KraskovConfig::default()
        },
        ..BpaConfig::default()
    })
}

/// Run selection for `target`. `options` may be null for the defaults. An
/// isolated target is a success whose report has no best step.
///
/// # Safety
/// `table` must be a live handle, `target` NUL-terminated, `options` null
/// or valid, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_select(
    table: *const BpaTable,
    target: *const c_char,
    options: *const BpaSelectOptions,
    out: *mut *mut BpaReport,
) -> BpaStatus {
    guard(|| {
        let t = &ref_arg(table, "table")?.table;
        let name = str_arg(target, "target")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| bpa_select_options_default());
        let report = run_bpa(t, name, &config(&opts)?)?;
        put(out, Box::into_raw(Box::new(BpaReport { report })), "out")
    })
}

/// # Safety
/// `report` must be null or a live handle from [`bpa_select`].
#[no_mangle]
pub unsafe extern "C" fn bpa_report_free(report: *mut BpaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Best path-step index, or 0 when the target is isolated.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_report_best_k(report: *const BpaReport, out: *mut usize) -> BpaStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.report;
        let k = match r.outcome {
            Outcome::Selected => r.best_k.unwrap_or(0),
            Outcome::IsolatedTarget => 0,
        };
        put(out, k, "out")
    })
}

/// Number of variables kept after pruning.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_report_n_selected(report: *const BpaReport, out: *mut usize) -> BpaStatus {
    guard(|| put(out, ref_arg(report, "report")?.report.m_wf.len(), "out"))
}

/// Name of the `index`-th kept variable; release with [`bpa_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_report_selected_name(
    report: *const BpaReport,
    index: usize,
    out: *mut *mut c_char,
) -> BpaStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.report;
        let name = r.m_wf.get(index).ok_or_else(|| {
            Failure(BpaStatus::OutOfRange, format!("index {index} of {} selected variables", r.m_wf.len()))
        })?;
        put(out, c_string(name.clone())?, "out")
    })
}

/// Full report as JSON; release with [`bpa_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bpa_report_to_json(report: *const BpaReport, out: *mut *mut c_char) -> BpaStatus {
    guard(|| put(out, c_string(to_json_string(&ref_arg(report, "report")?.report)?)?, "out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_a_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, BpaStatus::Panic);
        let msg = unsafe { CStr::from_ptr(bpa_last_error_message()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }

    #[test]
    fn success_clears_the_error() {
        let _ = guard(|| Err(Failure(BpaStatus::Data, "x".into())));
        assert!(!bpa_last_error_message().is_null());
        assert_eq!(guard(|| Ok(())), BpaStatus::Ok);
        assert!(bpa_last_error_message().is_null());
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(bpa_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
