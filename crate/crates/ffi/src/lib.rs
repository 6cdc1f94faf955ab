//! C interface to the `etlasso` crate.
//!
//! Objects cross the boundary as opaque handles created by `etl_*_new` or
//! `etl_*_fit`/`etl_*_select` and released with the matching `etl_*_free`.
//! Every fallible call returns an [`EtlStatus`]; on failure a description is
//! available from [`etl_last_error`] on the same thread. Array results are
//! copied into caller-owned buffers whose length is passed alongside.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use etlasso::baselines::{bic_select, cv_select, BaselineOptions};
use etlasso::etlasso::{et_lasso_select, EtLassoOptions, Refit, Stage2Pseudo};
use etlasso::lasso_path::{fit_path, GridSpec, LassoPath, SolverOptions};
use etlasso::{standardize, DesignMatrix, Error, Response};
use nalgebra::DMatrix;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ZeroVariance = 3,
    NonFinite = 4,
    RankDeficient = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Tuning knobs shared by the selection and path calls. Obtain defaults
/// from [`etl_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EtlOptions {
    pub grid_count: usize,
    pub grid_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Nonzero: the second-stage pseudo block permutes only the stage-one
    /// survivors instead of the whole design.
    pub stage2_selected_only: i32,
    /// Nonzero: coefficients are the Lasso fit at the final cutoff instead
    /// of least squares.
    pub lasso_refit: i32,
    /// Baseline paths stop once more than this fraction of n is active.
    pub max_df_fraction: f64,
}

impl EtlOptions {
    fn grid(&self) -> GridSpec {
        GridSpec {
            count: self.grid_count,
            ratio: self.grid_ratio,
        }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// Standardized design and centered response.
pub struct EtlDataset {
    x: DesignMatrix,
    y: Response,
}

/// Selected features with raw-scale coefficients.
pub struct EtlSelection {
    indices: Vec<usize>,
    coefficients: Vec<f64>,
    intercept: f64,
    cutoff_stage1: f64,
    cutoff_stage2: f64,
    chosen_lambda: f64,
}

/// A fitted Lasso path on the standardized scale.
pub struct EtlPath {
    path: LassoPath,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> EtlStatus {
    match e {
        Error::ZeroVarianceColumn(_) => EtlStatus::ZeroVariance,
        Error::NonFinite { .. } => EtlStatus::NonFinite,
        Error::RankDeficient(_) => EtlStatus::RankDeficient,
        Error::CholeskyFailure => EtlStatus::Numeric,
        _ => EtlStatus::InvalidArgument,
    }
}

fn fail(status: EtlStatus, msg: &str) -> EtlStatus {
    set_error(msg);
    status
}

/// Runs `f`, recording errors and converting panics.
fn guard<F: FnOnce() -> Result<(), (EtlStatus, String)>>(f: F) -> EtlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EtlStatus::Ok,
        Ok(Err((status, msg))) => fail(status, &msg),
        Err(_) => fail(EtlStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (EtlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (EtlStatus, String) {
    (EtlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), (EtlStatus, String)> {
    if buf.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err((
            EtlStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn etl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn etl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fills `out` with the default options.
#[no_mangle]
pub unsafe extern "C" fn etl_options_default(out: *mut EtlOptions) -> EtlStatus {
    if out.is_null() {
        return fail(EtlStatus::NullPointer, "options is null");
    }
    let grid = GridSpec::default();
    let solver = SolverOptions::default();
    *out = EtlOptions {
        grid_count: grid.count,
        grid_ratio: grid.ratio,
        tol: solver.tol,
        max_iter: solver.max_iter,
        stage2_selected_only: 0,
        lasso_refit: 0,
        max_df_fraction: BaselineOptions::default().max_df_fraction,
    };
    EtlStatus::Ok
}

/// Standardizes an `n x p` row-major matrix `x` and response `y` (length
/// `n`) into a new dataset handle.
#[no_mangle]
pub unsafe extern "C" fn etl_dataset_new(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    out: *mut *mut EtlDataset,
) -> EtlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if x.is_null() || y.is_null() {
            return Err(null("data"));
        }
        let len = n.checked_mul(p).ok_or((EtlStatus::InvalidArgument, "n * p overflows".to_string()))?;
        let xs = std::slice::from_raw_parts(x, len);
        let ys = std::slice::from_raw_parts(y, n);
        let raw = DMatrix::from_row_slice(n, p, xs);
        let (x, y) = standardize(&raw, ys).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EtlDataset { x, y }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn etl_dataset_free(ds: *mut EtlDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

#[no_mangle]
pub unsafe extern "C" fn etl_dataset_nrows(ds: *const EtlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.x.nrows())
}

#[no_mangle]
pub unsafe extern "C" fn etl_dataset_ncols(ds: *const EtlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.x.ncols())
}

unsafe fn inputs<'a>(
    ds: *const EtlDataset,
    opts: *const EtlOptions,
    out: *mut *mut EtlSelection,
) -> Result<(&'a EtlDataset, EtlOptions), (EtlStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = ptr::null_mut();
    let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
    let opts = opts.as_ref().ok_or_else(|| null("options"))?;
    Ok((ds, *opts))
}

/// Two-stage ET-Lasso selection with permutations drawn from `seed`.
#[no_mangle]
pub unsafe extern "C" fn etl_select(
    ds: *const EtlDataset,
    seed: u64,
    opts: *const EtlOptions,
    out: *mut *mut EtlSelection,
) -> EtlStatus {
    guard(|| {
        let (ds, o) = inputs(ds, opts, out)?;
        let et = EtLassoOptions {
            grid: o.grid(),
            solver: o.solver(),
            stage2_pseudo: if o.stage2_selected_only != 0 {
                Stage2Pseudo::Selected
            } else {
                Stage2Pseudo::Full
            },
            refit: if o.lasso_refit != 0 {
                Refit::LassoAtCutoff
            } else {
                Refit::Ols
            },
        };
        let r = et_lasso_select(&ds.x, &ds.y, seed, &et).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EtlSelection {
            cutoff_stage1: r.cutoff_stage1(),
            cutoff_stage2: r.cutoff_stage2().unwrap_or(f64::NAN),
            chosen_lambda: f64::NAN,
            indices: r.selected,
            coefficients: r.coefficients,
            intercept: r.intercept,
        }));
        Ok(())
    })
}

/// Lasso tuned by BIC (`folds == 0`) or by `folds`-fold cross-validation.
#[no_mangle]
pub unsafe extern "C" fn etl_baseline_select(
    ds: *const EtlDataset,
    folds: usize,
    seed: u64,
    opts: *const EtlOptions,
    out: *mut *mut EtlSelection,
) -> EtlStatus {
    guard(|| {
        let (ds, o) = inputs(ds, opts, out)?;
        let b = BaselineOptions {
            grid: o.grid(),
            solver: o.solver(),
            max_df_fraction: o.max_df_fraction,
        };
        let trace = if folds == 0 {
            bic_select(&ds.x, &ds.y, &b)
        } else {
            cv_select(&ds.x, &ds.y, &b, folds, seed)
        }
        .map_err(lib_err)?;
        let (coefficients, intercept) = trace.raw_coefficients(&ds.x, &ds.y);
        *out = Box::into_raw(Box::new(EtlSelection {
            indices: trace.selected,
            coefficients,
            intercept,
            cutoff_stage1: f64::NAN,
            cutoff_stage2: f64::NAN,
            chosen_lambda: trace.chosen_lambda,
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn etl_selection_free(s: *mut EtlSelection) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of selected features.
#[no_mangle]
pub unsafe extern "C" fn etl_selection_len(s: *const EtlSelection) -> usize {
    s.as_ref().map_or(0, |s| s.indices.len())
}

/// Copies the selected 0-based column indices, ascending.
#[no_mangle]
pub unsafe extern "C" fn etl_selection_indices(s: *const EtlSelection, buf: *mut usize, len: usize) -> EtlStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("selection"))?;
        copy_out(&s.indices, buf, len)
    })
}

/// Copies the raw-scale coefficients aligned with the indices.
#[no_mangle]
pub unsafe extern "C" fn etl_selection_coefficients(
    s: *const EtlSelection,
    buf: *mut f64,
    len: usize,
) -> EtlStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("selection"))?;
        copy_out(&s.coefficients, buf, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn etl_selection_intercept(s: *const EtlSelection) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.intercept)
}

/// Cutoff of stage 1 or 2; NaN for baselines and for a skipped stage 2.
#[no_mangle]
pub unsafe extern "C" fn etl_selection_cutoff(s: *const EtlSelection, stage: u32) -> f64 {
    match (s.as_ref(), stage) {
        (Some(s), 1) => s.cutoff_stage1,
        (Some(s), 2) => s.cutoff_stage2,
        _ => f64::NAN,
    }
}

/// Lambda chosen by a baseline criterion; NaN for ET-Lasso selections.
#[no_mangle]
pub unsafe extern "C" fn etl_selection_lambda(s: *const EtlSelection) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.chosen_lambda)
}

/// Fits the full Lasso path on the dataset's own grid.
#[no_mangle]
pub unsafe extern "C" fn etl_path_fit(
    ds: *const EtlDataset,
    opts: *const EtlOptions,
    out: *mut *mut EtlPath,
) -> EtlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let o = opts.as_ref().ok_or_else(|| null("options"))?;
        let grid = o.grid().grid_for_problem(&ds.x, &ds.y).map_err(lib_err)?;
        let path = fit_path(&ds.x, &ds.y, &grid, &o.solver(), None).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EtlPath { path }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn etl_path_free(p: *mut EtlPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of solved grid points.
#[no_mangle]
pub unsafe extern "C" fn etl_path_len(p: *const EtlPath) -> usize {
    p.as_ref().map_or(0, |p| p.path.visited())
}

#[no_mangle]
pub unsafe extern "C" fn etl_path_nfeatures(p: *const EtlPath) -> usize {
    p.as_ref().map_or(0, |p| p.path.nfeatures())
}

/// Copies the solved lambda values, descending.
#[no_mangle]
pub unsafe extern "C" fn etl_path_lambdas(p: *const EtlPath, buf: *mut f64, len: usize) -> EtlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("path"))?;
        copy_out(&p.path.grid().values()[..p.path.visited()], buf, len)
    })
}

/// Copies the standardized-scale coefficients at grid point `t`.
#[no_mangle]
pub unsafe extern "C" fn etl_path_coefficients(
    p: *const EtlPath,
    t: usize,
    buf: *mut f64,
    len: usize,
) -> EtlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("path"))?;
        if t >= p.path.visited() {
            return Err((
                EtlStatus::InvalidArgument,
                format!("point {t} out of range (path has {})", p.path.visited()),
            ));
        }
        copy_out(p.path.coefs(t), buf, len)
    })
}

/// Copies each feature's entry value (largest lambda with a nonzero
/// coefficient, 0 if it never entered).
#[no_mangle]
pub unsafe extern "C" fn etl_path_entry_values(p: *const EtlPath, buf: *mut f64, len: usize) -> EtlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("path"))?;
        copy_out(p.path.entry_values(), buf, len)
    })
}

/// Reads the last error as an owned Rust string (for tests and wrappers).
pub fn last_error_string() -> String {
    unsafe { CStr::from_ptr(etl_last_error()) }
        .to_string_lossy()
        .into_owned()
}
