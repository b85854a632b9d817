//! C ABI over `coherdist`.
//!
//! Every entry point returns a [`CdStatus`]; on failure the message is kept
//! per thread and read back with [`cd_last_error_message`]. Instances are
//! opaque handles released with [`cd_instance_free`]. Panics are caught at
//! the boundary and reported as `CD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coherdist::analytic::{normalize_amplitudes, p_sio_pure, DEFAULT_ZERO_TOL};
use coherdist::catalysis::{p_catalytic_mc, CatalysisInstance, Family};
use coherdist::distill::{compute, DistillOptions, OpClass, Route};
use coherdist::linalg::{HermitianOperator, PureState, C64};
use coherdist::sdp::SolveStatus;
use coherdist::states::{max_coherent, DistillationInstance};
use coherdist::Error;
use nalgebra::DMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    Panic = 4,
}

/// Free-operation class: `CD_CLASS_MIO` or `CD_CLASS_DIO`.
pub type CdClass = u32;
pub const CD_CLASS_MIO: CdClass = 0;
pub const CD_CLASS_DIO: CdClass = 1;

/// Solution route.
pub type CdRoute = u32;
pub const CD_ROUTE_COMPACT_PRIMAL: CdRoute = 0;
pub const CD_ROUTE_DUAL: CdRoute = 1;
pub const CD_ROUTE_CHOI: CdRoute = 2;

/// Two-state family for catalysis.
pub type CdFamily = u32;
pub const CD_FAMILY_V: CdFamily = 0;
pub const CD_FAMILY_U: CdFamily = 1;

/// Solver termination, as reported in [`CdSolution::solve_status`].
pub const CD_SOLVE_OPTIMAL: u32 = 0;
pub const CD_SOLVE_MAX_ITERATIONS: u32 = 1;
pub const CD_SOLVE_NUMERICAL_FAILURE: u32 = 2;

/// Distillation instance: input density, target dimension and infidelity.
pub struct CdInstance {
    inner: DistillationInstance,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CdSolution {
    /// Clamped to `[0, 1]`.
    pub probability: f64,
    pub raw: f64,
    pub gap: f64,
    pub iterations: u32,
    pub solve_status: u32,
    /// Nonzero when `eps >= 1 - 1/m` and no program was solved.
    pub trivial: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CdCatalysis {
    pub p_assisted: f64,
    pub p_unassisted: f64,
    pub ratio: f64,
    pub gap: f64,
    pub solve_status: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(CdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver { .. } => CdStatus::SolverFailure,
            _ => CdStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(CdStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Fail {
    Fail(CdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CdStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CdStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn class_of(c: CdClass) -> Result<OpClass, Fail> {
    match c {
        CD_CLASS_MIO => Ok(OpClass::Mio),
        CD_CLASS_DIO => Ok(OpClass::Dio),
        _ => Err(invalid(format!("unknown class {c}"))),
    }
}

fn route_of(r: CdRoute) -> Result<Route, Fail> {
    match r {
        CD_ROUTE_COMPACT_PRIMAL => Ok(Route::CompactPrimal),
        CD_ROUTE_DUAL => Ok(Route::Dual),
        CD_ROUTE_CHOI => Ok(Route::Choi),
        _ => Err(invalid(format!("unknown route {r}"))),
    }
}

fn status_code(s: SolveStatus) -> u32 {
    match s {
        SolveStatus::Optimal => CD_SOLVE_OPTIMAL,
        SolveStatus::MaxIterations => CD_SOLVE_MAX_ITERATIONS,
        SolveStatus::NumericalFailure => CD_SOLVE_NUMERICAL_FAILURE,
    }
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// without the terminator; 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// New instance from a `dim × dim` row-major density matrix. `im` may be
/// null for a real matrix. The matrix must be a density operator.
///
/// # Safety
/// `re` (and `im` when non-null) must hold `dim * dim` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_instance_new(
    re: *const f64,
    im: *const f64,
    dim: usize,
    m: usize,
    eps: f64,
    out: *mut *mut CdInstance,
) -> CdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let n = dim
            .checked_mul(dim)
            .ok_or_else(|| invalid("dim too large"))?;
        let re = slice(re, n, "re")?;
        let im = if im.is_null() {
            None
        } else {
            Some(slice(im, n, "im")?)
        };
        let mat = DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(re[i * dim + j], im.map_or(0.0, |v| v[i * dim + j]))
        });
        let rho = HermitianOperator::new(mat)?;
        let inner = DistillationInstance::new(rho, m, eps)?;
        store(out, CdInstance { inner });
        Ok(())
    })
}

/// New instance from real amplitudes of a pure input (normalized here).
///
/// # Safety
/// `amps` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_instance_from_amplitudes(
    amps: *const f64,
    n: usize,
    m: usize,
    eps: f64,
    out: *mut *mut CdInstance,
) -> CdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let psi = PureState::from_real(slice(amps, n, "amps")?)?;
        let inner = DistillationInstance::new(psi.density(), m, eps)?;
        store(out, CdInstance { inner });
        Ok(())
    })
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `inst` must come from a `cd_instance_*` constructor and not be used after.
#[no_mangle]
pub unsafe extern "C" fn cd_instance_free(inst: *mut CdInstance) {
    if !inst.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(inst))));
    }
}

/// Input dimension of an instance.
///
/// # Safety
/// `inst` must be a live handle; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_instance_dim(inst: *const CdInstance, dim: *mut usize) -> CdStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if dim.is_null() {
            return Err(null("dim"));
        }
        *dim = inst.inner.rho.dim();
        Ok(())
    })
}

/// Optimal success probability for `class` by `route`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_solve(
    inst: *const CdInstance,
    op_class: CdClass,
    route: CdRoute,
    out: *mut CdSolution,
) -> CdStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = compute(
            &inst.inner,
            class_of(op_class)?,
            route_of(route)?,
            &DistillOptions::default(),
        )?;
        *out = CdSolution {
            probability: r.probability,
            raw: r.raw,
            gap: r.gap,
            iterations: r.iterations as u32,
            solve_status: status_code(r.status),
            trivial: r.trivial as u32,
        };
        Ok(())
    })
}

/// Closed-form SIO/IO probability for a pure input given by real amplitudes.
///
/// # Safety
/// `amps` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_p_sio_pure(
    amps: *const f64,
    n: usize,
    m: usize,
    out: *mut f64,
) -> CdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if m < 2 {
            return Err(invalid(format!("m must be at least 2, got {m}")));
        }
        let psi = PureState::from_real(slice(amps, n, "amps")?)?;
        *out = p_sio_pure(&normalize_amplitudes(&psi, DEFAULT_ZERO_TOL)?, m);
        Ok(())
    })
}

/// DIO distillation of the family mixture at `q`, with and without a
/// maximally coherent qubit catalyst smoothed by `delta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cd_catalysis(
    family: CdFamily,
    q: f64,
    delta: f64,
    m: usize,
    eps: f64,
    out: *mut CdCatalysis,
) -> CdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let family = match family {
            CD_FAMILY_V => Family::V,
            CD_FAMILY_U => Family::U,
            _ => return Err(invalid(format!("unknown family {family}"))),
        };
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid(format!("q = {q} outside [0, 1]")));
        }
        let inst = CatalysisInstance::new(family.density(q)?, max_coherent(2)?, m, eps, delta)?;
        let r = p_catalytic_mc(&inst, OpClass::Dio, &DistillOptions::default())?;
        *out = CdCatalysis {
            p_assisted: r.probability,
            p_unassisted: r.unassisted,
            ratio: r.enhancement_ratio,
            gap: r.gap,
            solve_status: status_code(r.status),
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, CdStatus::Panic);
        let mut buf = [0 as c_char; 32];
        unsafe { cd_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let msg = unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) };
        assert_eq!(msg.to_str().unwrap(), "panic: boom");
    }
}
