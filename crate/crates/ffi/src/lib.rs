//! C interface to the fitness toolkit.
//!
//! Every function returns a [`FitnessStatus`]. On failure a message is kept
//! per thread and can be read with [`fitness_last_error`]. Objects are
//! opaque handles released with their matching `_free` function; strings
//! returned by the library are released with [`fitness_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fitness::causal::{identify_bias, CausalReport};
use fitness::data::{encode, load_dataset, synth_biased, Dataset, EncodeOptions, Schema, SynthSpec};
use fitness::evaluate::{mann_whitney_u, run_experiment, ExperimentConfig};
use fitness::metrics::{confusion_by_group, fairness, performance};
use fitness::report::Document;
use fitness::Error;

/// Bumped on every incompatible change to this interface.
pub const FITNESS_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DataError = 4,
    RuntimeError = 5,
    Panic = 6,
}

/// A loaded dataset with its schema.
pub struct FitnessDataset {
    inner: Dataset,
}

/// Causal effects of every protected feature of a dataset.
pub struct FitnessCausalReport {
    inner: CausalReport,
}

/// Performance and fairness of one set of predictions. Fairness values
/// that are undefined (a group without the needed rows) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FitnessGroupMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub spd: f64,
    pub aod: f64,
    pub eod: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FitnessMannWhitney {
    pub u: f64,
    pub u_other: f64,
    pub p: f64,
    pub exact: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(FitnessStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Json(_) => {
                FitnessStatus::InvalidArgument
            }
            e if e.is_input_error() => FitnessStatus::DataError,
            _ => FitnessStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FitnessStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FitnessStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FitnessStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            FitnessStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FitnessStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(FitnessStatus::RuntimeError, "string contains NUL".into()))
}

#[no_mangle]
pub extern "C" fn fitness_abi_version() -> u32 {
    FITNESS_ABI_VERSION
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fitness_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fitness_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a CSV file. `schema` is a preset name (adult, compas, german,
/// bank) or the path of a schema file.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_dataset_load(
    path: *const c_char,
    schema: *const c_char,
    out: *mut *mut FitnessDataset,
) -> FitnessStatus {
    guard(|| {
        let path = text(path, "path")?;
        let schema = Schema::resolve(text(schema, "schema")?)?;
        let inner = load_dataset(Path::new(path), &schema)?;
        put(out, Box::into_raw(Box::new(FitnessDataset { inner })), "out")
    })
}

/// Generates a synthetic biased dataset from a spec such as
/// `n=2000,p_priv=0.5,pf1=0.8,pf0=0.2`.
///
/// # Safety
/// `spec` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_dataset_synthetic(
    spec: *const c_char,
    seed: u64,
    out: *mut *mut FitnessDataset,
) -> FitnessStatus {
    guard(|| {
        let spec = SynthSpec::parse(text(spec, "spec")?)?;
        let inner = synth_biased(&spec, seed)?;
        put(out, Box::into_raw(Box::new(FitnessDataset { inner })), "out")
    })
}

/// Replaces the protected features with a comma-separated list of column
/// names declared in the schema.
///
/// # Safety
/// `dataset` must be a live handle; `names` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fitness_dataset_set_protected(
    dataset: *mut FitnessDataset,
    names: *const c_char,
) -> FitnessStatus {
    guard(|| {
        let ds = dataset.as_mut().ok_or_else(|| null("dataset"))?;
        let names: Vec<String> = text(names, "names")?.split(',').map(|s| s.trim().to_owned()).collect();
        let schema = ds.inner.schema().clone().with_protected(&names)?;
        ds.inner = ds.inner.clone().with_schema(schema)?;
        Ok(())
    })
}

/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_dataset_rows(dataset: *const FitnessDataset, out: *mut usize) -> FitnessStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        put(out, ds.inner.len(), "out")
    })
}

/// # Safety
/// `dataset` must be NULL or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn fitness_dataset_free(dataset: *mut FitnessDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Estimates the causal effect of every protected feature with smoothing
/// `lambda`.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_identify(
    dataset: *const FitnessDataset,
    lambda: f64,
    out: *mut *mut FitnessCausalReport,
) -> FitnessStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let encoded = encode(&ds.inner, EncodeOptions::default())?;
        let inner = identify_bias(&encoded, lambda)?;
        put(out, Box::into_raw(Box::new(FitnessCausalReport { inner })), "out")
    })
}

/// Number of protected features in the report.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_causal_report_features(
    report: *const FitnessCausalReport,
    out: *mut usize,
) -> FitnessStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        put(out, r.inner.features.len(), "out")
    })
}

/// Difference of favorable intervened probabilities, privileged minus
/// unprivileged, for feature `index`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_causal_report_acd(
    report: *const FitnessCausalReport,
    index: usize,
    out: *mut f64,
) -> FitnessStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let f = r.inner.features.get(index).ok_or_else(|| {
            Failure(
                FitnessStatus::InvalidArgument,
                format!(
                    "feature index {index} out of range ({} features)",
                    r.inner.features.len()
                ),
            )
        })?;
        put(out, f.acd, "out")
    })
}

/// Serializes the report to JSON. Free the result with
/// [`fitness_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_causal_report_to_json(
    report: *const FitnessCausalReport,
    out: *mut *mut c_char,
) -> FitnessStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let json = serde_json::to_string(&r.inner).map_err(Error::from)?;
        put(out, into_c_string(json)?, "out")
    })
}

/// # Safety
/// `report` must be NULL or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn fitness_causal_report_free(report: *mut FitnessCausalReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Scores `n` predictions. Labels, predictions and groups are 0 or 1;
/// group 1 is privileged.
///
/// # Safety
/// Each array must hold `n` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_group_metrics(
    y_true: *const u8,
    y_pred: *const u8,
    group: *const u8,
    n: usize,
    out: *mut FitnessGroupMetrics,
) -> FitnessStatus {
    guard(|| {
        let (y, p, g) = (
            slice(y_true, n, "y_true")?,
            slice(y_pred, n, "y_pred")?,
            slice(group, n, "group")?,
        );
        let conf = confusion_by_group(y, p, g)?;
        let perf = performance(&conf)?;
        let fair = fairness(&conf);
        let value = FitnessGroupMetrics {
            accuracy: perf.accuracy,
            precision: perf.precision,
            recall: perf.recall,
            f1: perf.f1,
            spd: fair.spd.unwrap_or(f64::NAN),
            aod: fair.aod.unwrap_or(f64::NAN),
            eod: fair.eod.unwrap_or(f64::NAN),
        };
        put(out, value, "out")
    })
}

/// Two-sided Mann-Whitney U test of `a` against `b`.
///
/// # Safety
/// `a` and `b` must hold `n1` and `n2` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_mann_whitney_u(
    a: *const f64,
    n1: usize,
    b: *const f64,
    n2: usize,
    out: *mut FitnessMannWhitney,
) -> FitnessStatus {
    guard(|| {
        let r = mann_whitney_u(slice(a, n1, "a")?, slice(b, n2, "b")?)?;
        put(
            out,
            FitnessMannWhitney {
                u: r.u,
                u_other: r.u_other,
                p: r.p,
                exact: r.exact,
            },
            "out",
        )
    })
}

/// Runs a repeated experiment. `config_json` holds the experiment settings,
/// e.g. `{"model": "lr", "repeats": 10, "seed": 7}`; omitted fields take
/// their defaults. On success `report_json` receives the run report, to be
/// released with [`fitness_string_free`].
///
/// # Safety
/// `dataset` must be a live handle; `config_json` must be NUL-terminated;
/// `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fitness_run_experiment(
    dataset: *const FitnessDataset,
    config_json: *const c_char,
    report_json: *mut *mut c_char,
) -> FitnessStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let config: ExperimentConfig = serde_json::from_str(text(config_json, "config_json")?).map_err(Error::from)?;
        let report = run_experiment(&ds.inner, &config)?;
        put(
            report_json,
            into_c_string(Document::Run(&report).to_json()?)?,
            "report_json",
        )
    })
}
