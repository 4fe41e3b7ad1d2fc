//! C ABI over the sinhgordon library.
//!
//! Handles are opaque pointers created by the `sg_params_*` and `sg_operator_*`
//! constructors and released with the matching `*_free`. Every fallible function
//! returns an [`SgStatus`]; on failure [`sg_last_error_message`] describes the
//! error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sinhgordon::cli::cmd_axioms;
use sinhgordon::config::RunConfig;
use sinhgordon::correlators::{two_point_kernel, CorrelatorConfig};
use sinhgordon::form_factors::{form_factor, OperatorSpec};
use sinhgordon::minkowski::TwoVector;
use sinhgordon::scattering::s_matrix;
use sinhgordon::special_fn::{log_barnes_g, log_gamma, two_body_f, CouplingParams};
use sinhgordon::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    Pole = 3,
    ZeroOfG = 4,
    CoincidentRapidities = 5,
    TooManyParticles = 6,
    Timelike = 7,
    NonConvergent = 8,
    Budget = 9,
    IndexOutOfRange = 10,
    Config = 11,
    BufferTooSmall = 12,
    CheckFailed = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgComplex {
    pub re: f64,
    pub im: f64,
}

impl From<SgComplex> for Complex64 {
    fn from(z: SgComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for SgComplex {
    fn from(z: Complex64) -> Self {
        SgComplex { re: z.re, im: z.im }
    }
}

/// Coupling constants and mass.
pub struct SgParams(CouplingParams);

/// A local operator.
pub struct SgOperator(OperatorSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SgStatus {
    match e {
        Error::Pole { .. } => SgStatus::Pole,
        Error::ZeroOfG { .. } => SgStatus::ZeroOfG,
        Error::InvalidParam(_) => SgStatus::InvalidParam,
        Error::CoincidentRapidities { .. } => SgStatus::CoincidentRapidities,
        Error::TooManyParticles { .. } => SgStatus::TooManyParticles,
        Error::Timelike { .. } => SgStatus::Timelike,
        Error::NonConvergentFit(_) | Error::NonConvergentExtrapolation(_) => SgStatus::NonConvergent,
        Error::Budget { .. } => SgStatus::Budget,
        Error::IndexOutOfRange { .. } | Error::EnumerationOverflow { .. } => SgStatus::IndexOutOfRange,
        Error::Config(_) => SgStatus::Config,
    }
}

/// Runs `f`, turning errors and panics into a status and the thread's last error.
fn guard<F>(f: F) -> SgStatus
where
    F: FnOnce() -> Result<(), (SgStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SgStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SgStatus::Panic
        }
    }
}

fn lib<T>(r: sinhgordon::Result<T>) -> Result<T, (SgStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SgStatus, String) {
    (SgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SgStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SgStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SgStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string(p: *const c_char, what: &str) -> Result<String, (SgStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (SgStatus::InvalidParam, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call from the same thread.
#[no_mangle]
pub extern "C" fn sg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates parameters from b ∈ (0, 1/2] and mass m > 0.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sg_params_from_b(b: f64, m: f64, out: *mut *mut SgParams) -> SgStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = Box::into_raw(Box::new(SgParams(lib(CouplingParams::from_b(b, m))?)));
        Ok(())
    })
}

/// Creates parameters from the coupling g > 0 and mass m > 0.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sg_params_from_g(g: f64, m: f64, out: *mut *mut SgParams) -> SgStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = Box::into_raw(Box::new(SgParams(lib(CouplingParams::from_g(g, m))?)));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from `sg_params_from_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_params_free(params: *mut SgParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_s_matrix(params: *const SgParams, beta: SgComplex, out: *mut SgComplex) -> SgStatus {
    guard(|| {
        let p = deref(params, "params")?;
        *out_ref(out, "out")? = lib(s_matrix(beta.into(), &p.0))?.into();
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_log_gamma(z: SgComplex, out: *mut SgComplex) -> SgStatus {
    guard(|| {
        *out_ref(out, "out")? = lib(log_gamma(z.into()))?.into();
        Ok(())
    })
}

/// Principal value of log G(z).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_log_barnes_g(z: SgComplex, out: *mut SgComplex) -> SgStatus {
    guard(|| {
        *out_ref(out, "out")? = lib(log_barnes_g(z.into()))?.into();
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_two_body(params: *const SgParams, beta: SgComplex, out: *mut SgComplex) -> SgStatus {
    guard(|| {
        let p = deref(params, "params")?;
        *out_ref(out, "out")? = lib(two_body_f(beta.into(), &p.0))?.into();
        Ok(())
    })
}

/// The elementary field operator.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_field(params: *const SgParams, out: *mut *mut SgOperator) -> SgStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out_ref(out, "out")?;
        *slot = Box::into_raw(Box::new(SgOperator(lib(OperatorSpec::field(&p.0))?)));
        Ok(())
    })
}

/// A synthetic operator p(β|ℓ) = κⁿ (Σe^β)^s Σ_j a_j Q^j.
///
/// # Safety
/// `label` must be a NUL-terminated string, `coeffs` must point to `n_coeffs`
/// values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_synthetic(
    label: *const c_char,
    spin: f64,
    kappa: SgComplex,
    coeffs: *const SgComplex,
    n_coeffs: usize,
    out: *mut *mut SgOperator,
) -> SgStatus {
    guard(|| {
        let label = string(label, "label")?;
        let coeffs: Vec<Complex64> = slice(coeffs, n_coeffs, "coeffs")?.iter().map(|&c| c.into()).collect();
        let slot = out_ref(out, "out")?;
        *slot = Box::into_raw(Box::new(SgOperator(OperatorSpec::synthetic(&label, spin, kappa.into(), coeffs, 0.0))));
        Ok(())
    })
}

/// # Safety
/// `op` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_adjoint(op: *const SgOperator, out: *mut *mut SgOperator) -> SgStatus {
    guard(|| {
        let o = deref(op, "op")?;
        let slot = out_ref(out, "out")?;
        *slot = Box::into_raw(Box::new(SgOperator(lib(o.0.adjoint())?)));
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_free(op: *mut SgOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// n-particle form factor at rapidities `beta[0..n]`.
///
/// # Safety
/// Handles must be live, `beta` must point to `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_form_factor(
    op: *const SgOperator,
    params: *const SgParams,
    beta: *const SgComplex,
    n: usize,
    out: *mut SgComplex,
) -> SgStatus {
    guard(|| {
        let o = deref(op, "op")?;
        let p = deref(params, "params")?;
        let b: Vec<Complex64> = slice(beta, n, "beta")?.iter().map(|&c| c.into()).collect();
        *out_ref(out, "out")? = lib(form_factor(&o.0, &b, &p.0))?.into();
        Ok(())
    })
}

/// Shells 0..=cap of the two-point kernel at x = (0, r); writes `cap + 1` values.
///
/// # Safety
/// Handles must be live and `shells` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sg_two_point_shells(
    op: *const SgOperator,
    params: *const SgParams,
    r: f64,
    cap: usize,
    shells: *mut SgComplex,
    len: usize,
) -> SgStatus {
    guard(|| {
        let o = deref(op, "op")?;
        let p = deref(params, "params")?;
        if shells.is_null() {
            return Err(null("shells"));
        }
        if len < cap + 1 {
            return Err((SgStatus::BufferTooSmall, format!("need {} shells, buffer holds {len}", cap + 1)));
        }
        let k = lib(two_point_kernel(&o.0, &o.0, TwoVector::new(0.0, r), cap, &p.0, &CorrelatorConfig::default()))?;
        let out = std::slice::from_raw_parts_mut(shells, len);
        for (slot, s) in out.iter_mut().zip(&k.shells) {
            *slot = s.value.into();
        }
        Ok(())
    })
}

/// Runs the named axiom check (or "all") and returns its JSON report.
///
/// `config_json` may be null for the default configuration. The report string
/// must be released with [`sg_string_free`]. A failing check returns
/// `CheckFailed` and still fills `report`.
///
/// # Safety
/// `check` must be a NUL-terminated string, `config_json` null or one, and
/// `report` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_run_axioms(check: *const c_char, config_json: *const c_char, report: *mut *mut c_char) -> SgStatus {
    guard(|| {
        let name = string(check, "check")?;
        let cfg = if config_json.is_null() { RunConfig::default() } else { lib(RunConfig::from_json(&string(config_json, "config_json")?))? };
        let slot = out_ref(report, "report")?;
        *slot = ptr::null_mut();
        let r = lib(cmd_axioms(&name, &cfg))?;
        let text = CString::new(r.to_json().to_string()).map_err(|e| (SgStatus::Config, e.to_string()))?;
        *slot = text.into_raw();
        if r.passed() {
            Ok(())
        } else {
            Err((SgStatus::CheckFailed, "at least one check failed".into()))
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
