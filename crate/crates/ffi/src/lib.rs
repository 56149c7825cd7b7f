//! C ABI over the solitonlab toolkit.
//!
//! Every fallible call returns an [`SlStatus`]; on failure the message is kept
//! in thread-local storage and read back with [`sl_last_error`]. Objects are
//! opaque handles created by `*_new`/`*_from_*` and released by `*_free`.

use solitonlab::catalog::{self, SolitonInstance};
use solitonlab::geometry;
use solitonlab::scenario::{self, RunOptions, Scenario};
use solitonlab::spectral::{self, SpectralProblem};
use solitonlab::{Error, Expression};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Syntax = 4,
    Domain = 5,
    UnknownEntry = 6,
    Config = 7,
    NoConvergence = 8,
    Geometry = 9,
    Io = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for SlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Syntax { .. } | Error::UnknownIdentifier { .. } => SlStatus::Syntax,
            Error::Domain(_) => SlStatus::Domain,
            Error::UnknownCatalogEntry(_) => SlStatus::UnknownEntry,
            Error::Config { .. } => SlStatus::Config,
            Error::NoConvergence { .. } | Error::Factorization(_) => SlStatus::NoConvergence,
            Error::SingularMetric { .. }
            | Error::OutsideDomain { .. }
            | Error::LeftDomain { .. }
            | Error::StepTooLarge { .. }
            | Error::NotSchouten { .. } => SlStatus::Geometry,
            Error::Io(_) => SlStatus::Io,
            Error::DimensionMismatch { .. }
            | Error::DimensionTooLarge(_)
            | Error::DegenerateTestFunction
            | Error::Invalid(_) => SlStatus::InvalidArgument,
        }
    }
}

/// Parsed expression in variables `x1..xn`.
pub struct SlExpression(Expression);

/// Soliton instance: metric chart, potential, `rho` and `lambda`.
pub struct SlSoliton(SolitonInstance);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SlStatus, msg: impl Into<String>) -> SlStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), SlStatus>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SlStatus::Panic, msg)
        }
    }
}

fn lib(e: Error) -> SlStatus {
    fail(SlStatus::from(&e), e.to_string())
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, SlStatus> {
    if s.is_null() {
        return Err(fail(SlStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(SlStatus::InvalidUtf8, e.to_string()))
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Result<&'a [f64], SlStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SlStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, SlStatus> {
    p.as_mut().ok_or_else(|| fail(SlStatus::NullPointer, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, SlStatus> {
    p.as_ref().ok_or_else(|| fail(SlStatus::NullPointer, "null handle"))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sl_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `source` must be a valid NUL-terminated string and `out_expr` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_expression_parse(source: *const c_char, out_expr: *mut *mut SlExpression) -> SlStatus {
    guard(|| {
        let slot = out(out_expr)?;
        *slot = ptr::null_mut();
        let e = Expression::parse(text(source)?).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SlExpression(e)));
        Ok(())
    })
}

/// # Safety
/// `expr` must come from [`sl_expression_parse`] and not be freed yet; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_expression_free(expr: *mut SlExpression) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Highest variable index used by the expression.
///
/// # Safety
/// `expr` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_expression_arity(expr: *const SlExpression) -> usize {
    expr.as_ref().map_or(0, |e| e.0.arity())
}

/// # Safety
/// `expr` must be a live handle, `x` must hold `n` values and `value` be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_expression_eval(
    expr: *const SlExpression,
    x: *const f64,
    n: usize,
    value: *mut f64,
) -> SlStatus {
    guard(|| {
        let e = handle(expr)?;
        let v = e.0.eval(slice(x, n)?).map_err(lib)?;
        *out(value)? = v;
        Ok(())
    })
}

/// Value, gradient (`n` entries) and row-major Hessian (`n*n` entries).
/// `gradient` and `hessian` may be NULL when not wanted.
///
/// # Safety
/// `expr` must be a live handle; non-NULL buffers must have the sizes above.
#[no_mangle]
pub unsafe extern "C" fn sl_expression_eval_jet(
    expr: *const SlExpression,
    x: *const f64,
    n: usize,
    value: *mut f64,
    gradient: *mut f64,
    hessian: *mut f64,
) -> SlStatus {
    guard(|| {
        let e = handle(expr)?;
        let jet = e.0.eval_jet(slice(x, n)?).map_err(lib)?;
        *out(value)? = jet.value();
        if !gradient.is_null() {
            std::slice::from_raw_parts_mut(gradient, n).copy_from_slice(jet.gradient());
        }
        if !hessian.is_null() {
            std::slice::from_raw_parts_mut(hessian, n * n).copy_from_slice(&jet.hessian_matrix());
        }
        Ok(())
    })
}

/// Catalog entry with its default parameters.
///
/// # Safety
/// `id` must be a valid NUL-terminated string and `out_soliton` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_from_catalog(id: *const c_char, out_soliton: *mut *mut SlSoliton) -> SlStatus {
    guard(|| {
        let slot = out(out_soliton)?;
        *slot = ptr::null_mut();
        let id = text(id)?;
        let s = catalog::builtin().and_then(|c| c.instance(id)).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SlSoliton(s)));
        Ok(())
    })
}

/// Soliton from the JSON definition used by inline scenario entries.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out_soliton` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_from_json(json: *const c_char, out_soliton: *mut *mut SlSoliton) -> SlStatus {
    guard(|| {
        let slot = out(out_soliton)?;
        *slot = ptr::null_mut();
        let spec: catalog::SolitonSpec =
            serde_json::from_str(text(json)?).map_err(|e| fail(SlStatus::Config, e.to_string()))?;
        let s = SolitonInstance::from_spec(&spec).map_err(lib)?;
        *slot = Box::into_raw(Box::new(SlSoliton(s)));
        Ok(())
    })
}

/// # Safety
/// `soliton` must come from a `sl_soliton_from_*` call and not be freed yet; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_free(soliton: *mut SlSoliton) {
    if !soliton.is_null() {
        drop(Box::from_raw(soliton));
    }
}

/// # Safety
/// `soliton` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_dim(soliton: *const SlSoliton) -> usize {
    soliton.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `soliton` must be a live handle; `rho` and `lambda` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_constants(soliton: *const SlSoliton, rho: *mut f64, lambda: *mut f64) -> SlStatus {
    guard(|| {
        let s = handle(soliton)?;
        *out(rho)? = s.0.rho;
        *out(lambda)? = s.0.lambda;
        Ok(())
    })
}

/// Base point (`dim` entries).
///
/// # Safety
/// `soliton` must be a live handle; `x` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_base_point(soliton: *const SlSoliton, x: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let s = handle(soliton)?;
        let p = &s.0.base_point;
        if len < p.len() || x.is_null() {
            return Err(fail(SlStatus::BufferTooSmall, format!("need {} values", p.len())));
        }
        std::slice::from_raw_parts_mut(x, p.len()).copy_from_slice(p);
        Ok(())
    })
}

/// Scalar curvature of the metric at `x`.
///
/// # Safety
/// `soliton` must be a live handle, `x` must hold `n` values and `value` be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_scalar_curvature(
    soliton: *const SlSoliton,
    x: *const f64,
    n: usize,
    value: *mut f64,
) -> SlStatus {
    guard(|| {
        let s = handle(soliton)?;
        *out(value)? = geometry::scalar_curvature(&s.0.metric, slice(x, n)?).map_err(lib)?;
        Ok(())
    })
}

/// Max-entry residual of `Ric + Hess f − (ρR + λ)g` at `x`.
///
/// # Safety
/// `soliton` must be a live handle, `x` must hold `n` values and `value` be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_soliton_residual(
    soliton: *const SlSoliton,
    x: *const f64,
    n: usize,
    value: *mut f64,
) -> SlStatus {
    guard(|| {
        let s = handle(soliton)?;
        *out(value)? = catalog::soliton_residual(&s.0, slice(x, n)?).map_err(lib)?;
        Ok(())
    })
}

/// Lowest `m` eigenvalues of the drifted Laplacian of `f` on `[−L, L]^dim`
/// with `points` nodes per axis (odd, ≥ 51), written to `values[0..m]`;
/// `values[0]` is the constant mode. `refinement_error` may be NULL.
///
/// # Safety
/// `f` must be a live handle, `values` must hold `m` values.
#[no_mangle]
pub unsafe extern "C" fn sl_spectral_eigenvalues(
    f: *const SlExpression,
    dim: usize,
    half_width: f64,
    points: usize,
    m: usize,
    values: *mut f64,
    refinement_error: *mut f64,
) -> SlStatus {
    guard(|| {
        let f = handle(f)?;
        if values.is_null() {
            return Err(fail(SlStatus::NullPointer, "null output array"));
        }
        let p = SpectralProblem::new(dim, half_width, points, f.0.clone()).map_err(lib)?;
        let r = spectral::smallest_nonzero(&p, m).map_err(lib)?;
        std::slice::from_raw_parts_mut(values, m).copy_from_slice(&r.eigenvalues);
        if let Some(eps) = refinement_error.as_mut() {
            *eps = r.refinement_error.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Runs a scenario given as JSON text. `out_dir` may be NULL (default
/// directory rules apply). `exit_code` receives 0, or 1 on a hard failure.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string, `out_dir` NULL or one,
/// and `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_run_scenario(
    config_json: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> SlStatus {
    guard(|| {
        let code = out(exit_code)?;
        let sc = Scenario::from_json(text(config_json)?).map_err(lib)?;
        let out_dir = if out_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(text(out_dir)?))
        };
        let opts = RunOptions {
            out_dir,
            ..Default::default()
        };
        *code = scenario::run(&sc, &opts).map_err(lib)?.exit_code;
        Ok(())
    })
}
