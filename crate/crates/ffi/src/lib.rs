//! C interface to `fidelity_core`.
//!
//! Every fallible function returns a [`FidStatus`] code as `int32_t` and
//! writes results through out-pointers. On failure the message is kept
//! per thread and can be read with [`fid_last_error`]. Handles are opaque
//! and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fidelity_core::basis::SectorBasis;
use fidelity_core::eigen::{GroundStateSolution, SolverOptions};
use fidelity_core::fidelity::{
    chi_from_derivatives, chi_from_stencil, overlap_fidelity, ChainSolver, ExpansionOptions, GroundStateSource,
    PointWarning,
};
use fidelity_core::Error;

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    NotConverged = 4,
    Degenerate = 5,
    Gauge = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Stencil fit of `F²`.
pub const FID_METHOD_STENCIL: i32 = 0;
/// Finite-difference derivative vectors.
pub const FID_METHOD_DERIVATIVE: i32 = 1;

pub const FID_WARN_FIT_RESIDUAL: u32 = 1;
pub const FID_WARN_H_UNCONVERGED: u32 = 2;
pub const FID_WARN_METHOD_MISMATCH: u32 = 4;

/// Sz = 0 basis of an even chain.
pub struct FidBasis(SectorBasis);

/// Ground state of one Hamiltonian.
pub struct FidSolution(GroundStateSolution);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FidExpansion {
    pub lambda: f64,
    pub step: f64,
    pub chi2: f64,
    pub chi3: f64,
    pub fit_residual: f64,
    pub energy: f64,
    pub gap: f64,
    /// `F(λ, λ + h)`.
    pub f_plus_h: f64,
    /// Bitwise OR of `FID_WARN_*`.
    pub warnings: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> FidStatus {
    match err {
        Error::IndexOutOfRange { .. } | Error::NotInSector { .. } | Error::LengthOutOfRange(_) => FidStatus::OutOfRange,
        Error::NotConverged { .. } => FidStatus::NotConverged,
        Error::Degenerate { .. } => FidStatus::Degenerate,
        Error::GaugeUndefined { .. } => FidStatus::Gauge,
        _ => FidStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (FidStatus, String)>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FidStatus::Ok as i32,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status as i32
        }
        Err(_) => {
            set_error("internal panic");
            FidStatus::Panic as i32
        }
    }
}

fn lib_err(e: Error) -> (FidStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FidStatus, String) {
    (FidStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread; empty if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fid_basis_new(sites: u32, out: *mut *mut FidBasis) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let basis = SectorBasis::zero_magnetization(sites as usize).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FidBasis(basis)));
        Ok(())
    })
}

/// # Safety
/// `basis` must come from [`fid_basis_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fid_basis_free(basis: *mut FidBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fid_basis_dim(basis: *const FidBasis, out: *mut u64) -> i32 {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = b.0.dim() as u64;
        Ok(())
    })
}

/// Index of a bit configuration within the basis.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fid_basis_rank(basis: *const FidBasis, mask: u64, out: *mut u64) -> i32 {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = b.0.rank(mask).map_err(lib_err)? as u64;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fid_basis_unrank(basis: *const FidBasis, index: u64, out: *mut u64) -> i32 {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = b.0.unrank(index as usize).map_err(lib_err)?;
        Ok(())
    })
}

/// Ground state of `H(λ)` with default solver settings and the given seed.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fid_ground_state(
    basis: *const FidBasis,
    lambda: f64,
    seed: u64,
    out: *mut *mut FidSolution,
) -> i32 {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = SolverOptions {
            seed,
            ..SolverOptions::default()
        };
        let sol = ChainSolver::new(&b.0, opts).solve(lambda, None).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FidSolution(sol)));
        Ok(())
    })
}

/// # Safety
/// `solution` must come from [`fid_ground_state`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fid_solution_free(solution: *mut FidSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fid_solution_energy(solution: *const FidSolution, out: *mut f64) -> i32 {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.0.energy;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fid_solution_gap(solution: *const FidSolution, out: *mut f64) -> i32 {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.0.gap();
        Ok(())
    })
}

/// Copies the ground-state vector into `buffer`, which must hold `len`
/// doubles with `len` at least the basis dimension.
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fid_solution_vector(solution: *const FidSolution, buffer: *mut f64, len: usize) -> i32 {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let v = &s.0.vector;
        if len < v.len() {
            return Err((
                FidStatus::BufferTooSmall,
                format!("buffer holds {len} values, vector has {}", v.len()),
            ));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buffer, v.len());
        Ok(())
    })
}

/// `|⟨a|b⟩|` of two vectors of length `len`.
///
/// # Safety
/// `a` and `b` must be valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn fid_overlap_fidelity(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> i32 {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(null("vector"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let a = std::slice::from_raw_parts(a, len);
        let b = std::slice::from_raw_parts(b, len);
        *out = overlap_fidelity(a, b).map_err(lib_err)?;
        Ok(())
    })
}

/// `χ^(2)` and `χ^(3)` at `λ` with stencil step `h`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fid_expansion_point(
    basis: *const FidBasis,
    lambda: f64,
    h: f64,
    method: i32,
    out: *mut FidExpansion,
) -> i32 {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let opts = ExpansionOptions {
            step: h,
            ..ExpansionOptions::default()
        };
        let source = ChainSolver::new(&b.0, SolverOptions::default());
        let point = match method {
            FID_METHOD_STENCIL => chi_from_stencil(&source, lambda, &opts),
            FID_METHOD_DERIVATIVE => chi_from_derivatives(&source, lambda, &opts),
            other => return Err((FidStatus::InvalidArgument, format!("unknown method {other}"))),
        }
        .map_err(lib_err)?;
        let warnings = point.warnings.iter().fold(0u32, |acc, w| {
            acc | match w {
                PointWarning::FitResidual => FID_WARN_FIT_RESIDUAL,
                PointWarning::StepUnconverged => FID_WARN_H_UNCONVERGED,
                PointWarning::MethodMismatch => FID_WARN_METHOD_MISMATCH,
            }
        });
        *out = FidExpansion {
            lambda: point.lambda,
            step: point.step,
            chi2: point.chi2,
            chi3: point.chi3,
            fit_residual: point.fit_residual,
            energy: point.energy,
            gap: point.gap_at_lambda,
            f_plus_h: point.f_plus(h).unwrap_or(f64::NAN),
            warnings,
        };
        Ok(())
    })
}
