//! C ABI over the `ofulinmat` simulator.
//!
//! Objects are exposed as opaque handles created by `*_new` and released by
//! the matching `*_free`. Every fallible call returns an [`OfuStatus`]; on
//! failure a human-readable message is kept per thread and can be read with
//! [`ofu_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ofulinmat::harness::{self, RunOptions};
use ofulinmat::{default_paper_config, solve_saddle_point, Error, EstimatorConfig, ExperimentConfig, GameMatrix, RidgeEstimator};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfuStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    Solver = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque zero-sum game matrix.
pub struct OfuGame(GameMatrix);

/// Opaque ridge estimator with its confidence ellipsoid.
pub struct OfuEstimator(RidgeEstimator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> OfuStatus {
    match err {
        Error::NonFinite { .. } => OfuStatus::NonFinite,
        Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. } => OfuStatus::DimensionMismatch,
        Error::Solver(_) | Error::Invariant(_) => OfuStatus::Solver,
        Error::Output { .. } | Error::Input { .. } | Error::Malformed { .. } => OfuStatus::Io,
        _ => OfuStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), OfuFail>) -> OfuStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OfuStatus::Ok,
        Ok(Err(OfuFail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            OfuStatus::Panic
        }
    }
}

struct OfuFail(OfuStatus, String);

impl From<Error> for OfuFail {
    fn from(e: Error) -> Self {
        OfuFail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> OfuFail {
    OfuFail(OfuStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], OfuFail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], OfuFail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, OfuFail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| OfuFail(OfuStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

fn copy_out(dst: &mut [f64], src: &[f64], what: &str) -> Result<(), OfuFail> {
    if dst.len() != src.len() {
        return Err(OfuFail(
            OfuStatus::DimensionMismatch,
            format!("`{what}` has length {}, expected {}", dst.len(), src.len()),
        ));
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ofu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ofu_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a `rows x cols` game from row-major `entries`.
///
/// # Safety
/// `entries` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofu_game_new(rows: usize, cols: usize, entries: *const f64, out: *mut *mut OfuGame) -> OfuStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = rows.checked_mul(cols).ok_or_else(|| OfuFail(OfuStatus::InvalidArgument, "shape overflows".into()))?;
        let entries = slice(entries, n, "entries")?;
        let game = GameMatrix::new(rows, cols, entries.to_vec())?;
        *out = Box::into_raw(Box::new(OfuGame(game)));
        Ok(())
    })
}

/// # Safety
/// `game` must come from [`ofu_game_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ofu_game_free(game: *mut OfuGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Solves the game: writes the maximin row strategy (`rows` doubles), the
/// minimax column strategy (`cols` doubles) and the value.
///
/// # Safety
/// `game` must be a live handle; the output buffers must have the stated
/// lengths.
#[no_mangle]
pub unsafe extern "C" fn ofu_game_solve(
    game: *const OfuGame,
    row_strategy: *mut f64,
    row_len: usize,
    col_strategy: *mut f64,
    col_len: usize,
    value: *mut f64,
) -> OfuStatus {
    guard(|| {
        let game = game.as_ref().ok_or_else(|| null("game"))?;
        let value = value.as_mut().ok_or_else(|| null("value"))?;
        let sp = solve_saddle_point(&game.0)?;
        copy_out(slice_mut(row_strategy, row_len, "row_strategy")?, sp.row_strategy.probs(), "row_strategy")?;
        copy_out(slice_mut(col_strategy, col_len, "col_strategy")?, sp.col_strategy.probs(), "col_strategy")?;
        *value = sp.value;
        Ok(())
    })
}

/// Creates an estimator for `experts` weights with regularizer `lambda`,
/// parameter bound `bound` and confidence level `1 - delta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofu_estimator_new(
    lambda: f64,
    bound: f64,
    delta: f64,
    experts: usize,
    out: *mut *mut OfuEstimator,
) -> OfuStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let est = RidgeEstimator::new(EstimatorConfig {
            lambda,
            bound,
            delta,
            experts,
        })?;
        *out = Box::into_raw(Box::new(OfuEstimator(est)));
        Ok(())
    })
}

/// # Safety
/// `est` must come from [`ofu_estimator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ofu_estimator_free(est: *mut OfuEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Adds one observation `(z, reward)`.
///
/// # Safety
/// `est` must be a live handle; `z` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ofu_estimator_absorb(est: *mut OfuEstimator, z: *const f64, len: usize, reward: f64) -> OfuStatus {
    guard(|| {
        let est = est.as_mut().ok_or_else(|| null("est"))?;
        est.0.absorb(slice(z, len, "z")?, reward)?;
        Ok(())
    })
}

/// Writes the regularized least-squares estimate (`len` must equal the
/// number of experts).
///
/// # Safety
/// `est` must be a live handle; `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ofu_estimator_estimate(est: *const OfuEstimator, out: *mut f64, len: usize) -> OfuStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("est"))?;
        let theta = est.0.point_estimate()?;
        copy_out(slice_mut(out, len, "out")?, &theta, "out")
    })
}

/// Writes the squared confidence radius.
///
/// # Safety
/// `est` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ofu_estimator_beta(est: *const OfuEstimator, out: *mut f64) -> OfuStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("est"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = est.0.beta_radius()?;
        Ok(())
    })
}

/// Writes `sqrt(x^T V^{-1} x)`.
///
/// # Safety
/// `est` must be a live handle; `x` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ofu_estimator_ellipsoid_norm(
    est: *const OfuEstimator,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> OfuStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("est"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = est.0.ellipsoid_norm(slice(x, len, "x")?)?;
        Ok(())
    })
}

/// Number of observations absorbed so far, or 0 for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ofu_estimator_observations(est: *const OfuEstimator) -> usize {
    est.as_ref().map_or(0, |e| e.0.n_obs())
}

/// Case-study configuration as a TOML string; release it with
/// [`ofu_string_free`].
#[no_mangle]
pub extern "C" fn ofu_default_config_toml() -> *mut c_char {
    CString::new(default_paper_config().to_toml_string())
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ofu_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs an experiment described by `config_toml` and writes its outputs.
/// `out_dir` overrides the configured directory when non-null; `workers`
/// is the thread count (0 = one per core).
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out_dir` must be null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ofu_run_experiment(config_toml: *const c_char, out_dir: *const c_char, workers: usize) -> OfuStatus {
    guard(|| {
        let mut cfg = ExperimentConfig::from_toml_str(c_str(config_toml, "config_toml")?)?;
        if !out_dir.is_null() {
            cfg.output.dir = PathBuf::from(c_str(out_dir, "out_dir")?);
        }
        harness::run_experiment(&cfg, &RunOptions { workers, seeds: None })?;
        Ok(())
    })
}
