//! C ABI over the leoids library.
//!
//! Every function returns a status code. On failure the message can be read
//! with [`leoids_last_error`]; it is kept per thread until the next failing
//! call. Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use leoids::features::ExtractConfig;
use leoids::harness::Predictor;
use leoids::ids::{Detector, Mode, Replay, WindowConfig, ALERT_HEADER};
use leoids::neural::ModelFile;
use leoids::simcore::trace::{write_trace_file, write_vectors_file};
use leoids::simcore::{run_schedule, ScenarioConfig};
use leoids::Error;

pub const LEOIDS_OK: i32 = 0;
/// A required pointer argument was null.
pub const LEOIDS_ERR_NULL: i32 = 1;
pub const LEOIDS_ERR_CONFIG: i32 = 2;
pub const LEOIDS_ERR_DATA: i32 = 3;
pub const LEOIDS_ERR_NUMERIC: i32 = 4;
/// A buffer passed in is too small.
pub const LEOIDS_ERR_BUFFER: i32 = 5;
/// A Rust panic was caught at the boundary.
pub const LEOIDS_ERR_PANIC: i32 = 6;

/// Alert sensitivity for [`leoids_detector_new`].
pub const LEOIDS_MODE_NORMAL: i32 = 0;
pub const LEOIDS_MODE_SAFE: i32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

/// A loaded classifier.
pub struct LeoidsModel {
    file: ModelFile,
}

/// A windowed detector with its model(s).
pub struct LeoidsDetector {
    detector: Detector,
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(code: i32, message: impl Into<String>) -> i32 {
    set_error(message.into());
    code
}

fn from_error(e: Error) -> i32 {
    let code = match e.exit_code() {
        2 => LEOIDS_ERR_CONFIG,
        4 => LEOIDS_ERR_NUMERIC,
        _ => LEOIDS_ERR_DATA,
    };
    fail(code, e.to_string())
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LEOIDS_OK,
        Ok(Err(code)) => code,
        Err(_) => fail(LEOIDS_ERR_PANIC, "internal panic"),
    }
}

trait OrCode<T> {
    fn or_code(self) -> Result<T, i32>;
}

impl<T> OrCode<T> for leoids::Result<T> {
    fn or_code(self) -> Result<T, i32> {
        self.map_err(from_error)
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, i32> {
    if p.is_null() {
        return Err(fail(LEOIDS_ERR_NULL, format!("{what} is null")));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => Err(fail(LEOIDS_ERR_CONFIG, format!("{what} is not UTF-8"))),
    }
}

fn not_null<T>(p: *const T, what: &str) -> Result<(), i32> {
    if p.is_null() {
        Err(fail(LEOIDS_ERR_NULL, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn leoids_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`, truncating to
/// `len - 1` bytes plus NUL. Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn leoids_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Simulates one scenario and writes `trace.csv`, `vectors.csv` and
/// `schedule.csv` into `out_dir`, which is created if needed.
///
/// # Safety
/// `out_dir` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn leoids_simulate(scenario: u8, duration: f64, seed: u64, out_dir: *const c_char) -> i32 {
    guard(|| {
        let dir = path_arg(out_dir, "out_dir")?;
        let config = ScenarioConfig::preset(scenario, duration, seed).or_code()?;
        let (out, schedule) = run_schedule(&[(0.0, config)]).or_code()?;
        std::fs::create_dir_all(&dir).map_err(|e| from_error(e.into()))?;
        write_trace_file(&dir.join("trace.csv"), &out.trace).or_code()?;
        write_vectors_file(&dir.join("vectors.csv"), &out.vectors).or_code()?;
        schedule.write_file(&dir.join("schedule.csv")).or_code()
    })
}

/// Loads a model file. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn leoids_model_load(path: *const c_char, out: *mut *mut LeoidsModel) -> i32 {
    guard(|| {
        not_null(out, "out")?;
        let path = path_arg(path, "path")?;
        let file = ModelFile::load(&path).or_code()?;
        *out = Box::into_raw(Box::new(LeoidsModel { file }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`leoids_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn leoids_model_free(model: *mut LeoidsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of output classes, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn leoids_model_classes(model: *const LeoidsModel) -> usize {
    model.as_ref().map_or(0, |m| m.file.model.config.output_classes)
}

/// Raw feature values per row the model expects, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn leoids_model_features(model: *const LeoidsModel) -> usize {
    model.as_ref().map_or(0, |m| m.file.feature_columns.len())
}

/// Class probabilities for `rows` raw feature rows.
///
/// `features` holds `rows * leoids_model_features(model)` values, row-major,
/// in the model's column order and unscaled. `out` receives
/// `rows * leoids_model_classes(model)` probabilities; `out_len` is its capacity.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn leoids_model_predict_proba(
    model: *const LeoidsModel,
    features: *const f64,
    rows: usize,
    out: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        not_null(model, "model")?;
        let m = &(*model).file;
        let width = m.feature_columns.len();
        let classes = m.model.config.output_classes;
        if rows == 0 {
            return Ok(());
        }
        not_null(features, "features")?;
        not_null(out, "out")?;
        if out_len < rows * classes {
            return Err(fail(LEOIDS_ERR_BUFFER, format!("out holds {out_len} values, need {}", rows * classes)));
        }
        let input = std::slice::from_raw_parts(features, rows * width);
        let columns: Vec<&str> = m.feature_columns.iter().map(String::as_str).collect();
        let dst = std::slice::from_raw_parts_mut(out, rows * classes);
        let mut ws = m.model.workspace();
        for (row, chunk) in input.chunks(width).zip(dst.chunks_mut(classes)) {
            let x = m.prepare_row(&columns, row).or_code()?;
            chunk.copy_from_slice(&m.model.predict_proba_one(&x, &mut ws).or_code()?);
        }
        Ok(())
    })
}

/// Builds a detector from a model file, or an MLP/GRU pair when `gru_path`
/// is non-null. `mode` is [`LEOIDS_MODE_NORMAL`] or [`LEOIDS_MODE_SAFE`];
/// `period` is the window length in seconds.
///
/// # Safety
/// Paths must be valid NUL-terminated strings (`gru_path` may be null);
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn leoids_detector_new(
    model_path: *const c_char,
    gru_path: *const c_char,
    mode: i32,
    period: f64,
    out: *mut *mut LeoidsDetector,
) -> i32 {
    guard(|| {
        not_null(out, "out")?;
        let mlp = ModelFile::load(&path_arg(model_path, "model_path")?).or_code()?;
        let predictor = if gru_path.is_null() {
            Predictor::Single(mlp)
        } else {
            Predictor::Hybrid { mlp, gru: ModelFile::load(&path_arg(gru_path, "gru_path")?).or_code()? }
        };
        let mode = match mode {
            LEOIDS_MODE_NORMAL => Mode::Normal,
            LEOIDS_MODE_SAFE => Mode::Safe,
            other => return Err(fail(LEOIDS_ERR_CONFIG, format!("unknown mode {other}"))),
        };
        let config = WindowConfig { period, mode, ..WindowConfig::default() };
        let detector = Detector::new(config, predictor, ExtractConfig::default()).or_code()?;
        *out = Box::into_raw(Box::new(LeoidsDetector { detector }));
        Ok(())
    })
}

/// # Safety
/// `detector` must be null or a handle from [`leoids_detector_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn leoids_detector_free(detector: *mut LeoidsDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

/// Replays a trace file as fast as possible and writes the alert log to
/// `alerts_path`. `alerts` and `windows` (both optional) receive the counts.
///
/// # Safety
/// Paths must be valid NUL-terminated strings; count pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn leoids_detector_run(
    detector: *const LeoidsDetector,
    trace_path: *const c_char,
    alerts_path: *const c_char,
    alerts: *mut usize,
    windows: *mut usize,
) -> i32 {
    guard(|| {
        not_null(detector, "detector")?;
        let trace = path_arg(trace_path, "trace_path")?;
        let out = path_arg(alerts_path, "alerts_path")?;
        let file = File::open(&trace).map_err(|e| from_error(e.into()))?;
        let replay = Replay::new(BufReader::new(file), f64::INFINITY).or_code()?;
        let report = (*detector).detector.run(replay, None).or_code()?;
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(&out)?);
            writeln!(w, "{ALERT_HEADER}")?;
            for a in &report.alerts {
                writeln!(w, "{a}")?;
            }
            w.flush()
        };
        write().map_err(|e| from_error(e.into()))?;
        if let Some(n) = alerts.as_mut() {
            *n = report.alerts.len();
        }
        if let Some(n) = windows.as_mut() {
            *n = report.windows.len();
        }
        Ok(())
    })
}
