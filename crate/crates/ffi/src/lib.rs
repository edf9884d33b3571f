//! C ABI for `cv-teleport`.
//!
//! States and density matrices are handed out as opaque heap handles that
//! the caller releases with the matching `*_free` function. Every fallible
//! call returns a [`CvtStatus`]; on failure a human-readable message is
//! available from [`cvt_last_error`] on the same thread.
//!
//! Coefficient buffers are split into real and imaginary arrays. Two-mode
//! coefficients and density-matrix elements use row-major order.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64 as C64;

use cv_teleport::analysis::wigner_point;
use cv_teleport::conditioning::{entanglement_entropy, subtract_photons_tmsv, SubtractionEvent};
use cv_teleport::states::{coherent_state, odd_cat_state, two_mode_squeezed_vacuum, DensityMatrix, SingleModeState, TwoModeState};
use cv_teleport::teleport::{
    averaged_density_matrix, conditional_fidelity, outcome_probability_density, HomodyneOutcome, OutcomeGrid,
};
use cv_teleport::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    /// The Fock basis is too small for the requested state.
    Truncation = 4,
    /// A state or outcome has zero norm or probability.
    ZeroNorm = 5,
    /// The outcome grid misses too much probability.
    GridTruncation = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

/// Single-mode pure state.
pub struct CvtSingleMode(SingleModeState);

/// Two-mode pure state.
pub struct CvtTwoMode(TwoModeState);

/// Single-mode density matrix.
pub struct CvtDensityMatrix(DensityMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> CvtStatus {
    match err {
        Error::DimensionMismatch { .. } => CvtStatus::DimensionMismatch,
        Error::TruncationExceeded { .. } => CvtStatus::Truncation,
        Error::ZeroState | Error::ZeroAmplitude | Error::ZeroProbability => CvtStatus::ZeroNorm,
        Error::GridTruncation { .. } | Error::TraceNotUnity(_) => CvtStatus::GridTruncation,
        _ => CvtStatus::InvalidArgument,
    }
}

fn fail(status: CvtStatus, message: impl Into<String>) -> CvtStatus {
    set_last_error(message.into());
    status
}

/// Runs `body`, translating library errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), CvtStatus>) -> CvtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CvtStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CvtStatus::Panic, message)
        }
    }
}

trait IntoStatus<T> {
    fn status(self) -> Result<T, CvtStatus>;
}

impl<T> IntoStatus<T> for cv_teleport::Result<T> {
    fn status(self) -> Result<T, CvtStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(handle: *const T, name: &str) -> Result<&'a T, CvtStatus> {
    handle.as_ref().ok_or_else(|| fail(CvtStatus::NullPointer, format!("{name} is null")))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), CvtStatus> {
    if out.is_null() {
        return Err(fail(CvtStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_scalar(out: *mut f64, value: f64) -> Result<(), CvtStatus> {
    if out.is_null() {
        return Err(fail(CvtStatus::NullPointer, "output scalar pointer is null"));
    }
    *out = value;
    Ok(())
}

unsafe fn write_split<'a>(
    values: impl ExactSizeIterator<Item = &'a C64>,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> Result<(), CvtStatus> {
    if re.is_null() || im.is_null() {
        return Err(fail(CvtStatus::NullPointer, "output buffer is null"));
    }
    if len < values.len() {
        return Err(fail(CvtStatus::BufferTooSmall, format!("buffer holds {len}, need {}", values.len())));
    }
    let (re, im) = (std::slice::from_raw_parts_mut(re, len), std::slice::from_raw_parts_mut(im, len));
    for (i, c) in values.enumerate() {
        re[i] = c.re;
        im[i] = c.im;
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cvt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn cvt_status_description(status: CvtStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        CvtStatus::Ok => b"ok\0",
        CvtStatus::NullPointer => b"null pointer\0",
        CvtStatus::InvalidArgument => b"invalid argument\0",
        CvtStatus::DimensionMismatch => b"dimension mismatch\0",
        CvtStatus::Truncation => b"Fock truncation too small\0",
        CvtStatus::ZeroNorm => b"zero norm or probability\0",
        CvtStatus::GridTruncation => b"outcome grid too narrow\0",
        CvtStatus::BufferTooSmall => b"buffer too small\0",
        CvtStatus::Panic => b"internal panic\0",
    };
    text.as_ptr().cast()
}

/// Normalized odd cat state `∝ |α⟩ − |−α⟩` in a basis of `dim` Fock states.
#[no_mangle]
pub unsafe extern "C" fn cvt_odd_cat_new(
    alpha_re: f64,
    alpha_im: f64,
    dim: usize,
    out: *mut *mut CvtSingleMode,
) -> CvtStatus {
    guard(|| {
        let state = odd_cat_state(C64::new(alpha_re, alpha_im), dim).status()?;
        emit(out, CvtSingleMode(state))
    })
}

/// Normalized coherent state `|α⟩`.
#[no_mangle]
pub unsafe extern "C" fn cvt_coherent_new(
    alpha_re: f64,
    alpha_im: f64,
    dim: usize,
    out: *mut *mut CvtSingleMode,
) -> CvtStatus {
    guard(|| {
        let state = coherent_state(C64::new(alpha_re, alpha_im), dim).status()?;
        emit(out, CvtSingleMode(state))
    })
}

/// Single-mode state from `dim` coefficients; normalized on construction.
#[no_mangle]
pub unsafe extern "C" fn cvt_single_mode_from_coeffs(
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut CvtSingleMode,
) -> CvtStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(fail(CvtStatus::NullPointer, "coefficient buffer is null"));
        }
        let (re, im) = (std::slice::from_raw_parts(re, dim), std::slice::from_raw_parts(im, dim));
        let coeffs = re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect();
        let state = SingleModeState::from_vec(coeffs).and_then(|s| s.normalize()).status()?;
        emit(out, CvtSingleMode(state))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cvt_single_mode_dim(state: *const CvtSingleMode) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the coefficients into caller buffers of length `len >= dim`.
#[no_mangle]
pub unsafe extern "C" fn cvt_single_mode_coeffs(
    state: *const CvtSingleMode,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CvtStatus {
    guard(|| write_split(deref(state, "state")?.0.coeffs().iter(), re, im, len))
}

#[no_mangle]
pub unsafe extern "C" fn cvt_single_mode_free(state: *mut CvtSingleMode) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Normalized two-mode squeezed vacuum with parameter `q`.
#[no_mangle]
pub unsafe extern "C" fn cvt_tmsv_new(q: f64, dim: usize, out: *mut *mut CvtTwoMode) -> CvtStatus {
    guard(|| {
        let state = two_mode_squeezed_vacuum(q, dim).and_then(|s| s.normalize()).status()?;
        emit(out, CvtTwoMode(state))
    })
}

/// Photon-subtracted squeezed vacuum heralded by `n1`, `n2` detector
/// clicks behind beam splitters of reflectance `r1`, `r2`. The returned
/// state is normalized; the heralding probability goes to `probability`
/// when it is non-null.
#[no_mangle]
pub unsafe extern "C" fn cvt_subtracted_tmsv_new(
    q: f64,
    n1: usize,
    n2: usize,
    r1: f64,
    r2: f64,
    dim: usize,
    out: *mut *mut CvtTwoMode,
    probability: *mut f64,
) -> CvtStatus {
    guard(|| {
        let event = SubtractionEvent::new(n1, n2, r1, r2).status()?;
        let (state, p) = subtract_photons_tmsv(q, &event, dim).status()?;
        let state = state.normalize().status()?;
        if !probability.is_null() {
            *probability = p;
        }
        emit(out, CvtTwoMode(state))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cvt_two_mode_dim(state: *const CvtTwoMode) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the `dim × dim` coefficients row-major into buffers of length
/// `len >= dim²`.
#[no_mangle]
pub unsafe extern "C" fn cvt_two_mode_coeffs(
    state: *const CvtTwoMode,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CvtStatus {
    guard(|| {
        let coeffs = deref(state, "state")?.0.coeffs().transpose();
        write_split(coeffs.iter(), re, im, len)
    })
}

/// Entanglement entropy in bits.
#[no_mangle]
pub unsafe extern "C" fn cvt_two_mode_entropy(state: *const CvtTwoMode, bits: *mut f64) -> CvtStatus {
    guard(|| {
        let e = entanglement_entropy(&deref(state, "state")?.0, 2.0).status()?;
        write_scalar(bits, e)
    })
}

#[no_mangle]
pub unsafe extern "C" fn cvt_two_mode_free(state: *mut CvtTwoMode) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Probability density and conditional fidelity at one homodyne outcome.
/// Either output may be null.
#[no_mangle]
pub unsafe extern "C" fn cvt_teleport_outcome(
    input: *const CvtSingleMode,
    entangled: *const CvtTwoMode,
    x0: f64,
    p1: f64,
    probability_density: *mut f64,
    fidelity: *mut f64,
) -> CvtStatus {
    guard(|| {
        let (input, entangled) = (&deref(input, "input")?.0, &deref(entangled, "entangled")?.0);
        let outcome = HomodyneOutcome::new(x0, p1).status()?;
        if !probability_density.is_null() {
            *probability_density = outcome_probability_density(input, entangled, &outcome).status()?;
        }
        if !fidelity.is_null() {
            *fidelity = conditional_fidelity(input, entangled, &outcome).status()?;
        }
        Ok(())
    })
}

/// Outcome-averaged output density matrix on a square Gauss–Legendre grid
/// of `order²` nodes over `[−bound, bound]²`.
#[no_mangle]
pub unsafe extern "C" fn cvt_teleport_average(
    input: *const CvtSingleMode,
    entangled: *const CvtTwoMode,
    bound: f64,
    order: usize,
    out: *mut *mut CvtDensityMatrix,
) -> CvtStatus {
    guard(|| {
        let (input, entangled) = (&deref(input, "input")?.0, &deref(entangled, "entangled")?.0);
        let grid = OutcomeGrid::square(bound, order).status()?;
        let rho = averaged_density_matrix(input, entangled, &grid).status()?;
        emit(out, CvtDensityMatrix(rho))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cvt_density_matrix_dim(rho: *const CvtDensityMatrix) -> usize {
    rho.as_ref().map_or(0, |r| r.0.dim())
}

#[no_mangle]
pub unsafe extern "C" fn cvt_density_matrix_trace(rho: *const CvtDensityMatrix, trace: *mut f64) -> CvtStatus {
    guard(|| write_scalar(trace, deref(rho, "rho")?.0.trace()))
}

/// Copies `⟨m|ρ|m'⟩` row-major into buffers of length `len >= dim²`.
#[no_mangle]
pub unsafe extern "C" fn cvt_density_matrix_elements(
    rho: *const CvtDensityMatrix,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CvtStatus {
    guard(|| {
        let elements = deref(rho, "rho")?.0.elements().transpose();
        write_split(elements.iter(), re, im, len)
    })
}

/// `⟨ψ|ρ|ψ⟩`.
#[no_mangle]
pub unsafe extern "C" fn cvt_density_matrix_fidelity(
    rho: *const CvtDensityMatrix,
    state: *const CvtSingleMode,
    fidelity: *mut f64,
) -> CvtStatus {
    guard(|| {
        let f = deref(rho, "rho")?.0.expectation(&deref(state, "state")?.0).status()?;
        write_scalar(fidelity, f)
    })
}

/// Wigner function `W(x, p)`.
#[no_mangle]
pub unsafe extern "C" fn cvt_density_matrix_wigner(
    rho: *const CvtDensityMatrix,
    x: f64,
    p: f64,
    value: *mut f64,
) -> CvtStatus {
    guard(|| write_scalar(value, wigner_point(&deref(rho, "rho")?.0, x, p)))
}

#[no_mangle]
pub unsafe extern "C" fn cvt_density_matrix_free(rho: *mut CvtDensityMatrix) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(cvt_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn cat_coefficients_round_trip() {
        let mut cat = ptr::null_mut();
        unsafe {
            assert_eq!(cvt_odd_cat_new(0.0, 1.5, 32, &mut cat), CvtStatus::Ok);
            assert_eq!(cvt_single_mode_dim(cat), 32);
            let (mut re, mut im) = (vec![0.0; 32], vec![0.0; 32]);
            assert_eq!(cvt_single_mode_coeffs(cat, re.as_mut_ptr(), im.as_mut_ptr(), 32), CvtStatus::Ok);
            let norm: f64 = re.iter().zip(&im).map(|(r, i)| r * r + i * i).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(re.iter().step_by(2).chain(im.iter().step_by(2)).all(|&c| c == 0.0));

            assert_eq!(cvt_single_mode_coeffs(cat, re.as_mut_ptr(), im.as_mut_ptr(), 16), CvtStatus::BufferTooSmall);
            cvt_single_mode_free(cat);
        }
    }

    #[test]
    fn errors_map_to_status_codes() {
        let mut ent = ptr::null_mut();
        let mut cat = ptr::null_mut();
        unsafe {
            assert_eq!(cvt_tmsv_new(1.5, 16, &mut ent), CvtStatus::InvalidArgument);
            assert!(ent.is_null());
            assert!(last_error().contains("1.5"));

            assert_eq!(cvt_odd_cat_new(0.0, 3.0, 8, &mut cat), CvtStatus::Truncation);
            assert_eq!(cvt_odd_cat_new(0.0, 0.0, 8, &mut cat), CvtStatus::ZeroNorm);
            assert_eq!(cvt_odd_cat_new(0.0, 1.0, 16, ptr::null_mut()), CvtStatus::NullPointer);

            let mut bits = 0.0;
            assert_eq!(cvt_two_mode_entropy(ptr::null(), &mut bits), CvtStatus::NullPointer);

            assert_eq!(cvt_odd_cat_new(0.0, 1.0, 16, &mut cat), CvtStatus::Ok);
            assert_eq!(cvt_tmsv_new(0.5, 24, &mut ent), CvtStatus::Ok);
            let mut p = 0.0;
            assert_eq!(cvt_teleport_outcome(cat, ent, 0.0, 0.0, &mut p, ptr::null_mut()), CvtStatus::DimensionMismatch);
            cvt_single_mode_free(cat);
            cvt_two_mode_free(ent);
        }
        let text = unsafe { CStr::from_ptr(cvt_status_description(CvtStatus::GridTruncation)) };
        assert_eq!(text.to_str().unwrap(), "outcome grid too narrow");
    }

    #[test]
    fn subtracted_resource_and_entropy() {
        let mut ent = ptr::null_mut();
        let mut p = 0.0;
        let mut bits = 0.0;
        unsafe {
            assert_eq!(cvt_subtracted_tmsv_new(0.8178, 1, 1, 0.15, 0.15, 64, &mut ent, &mut p), CvtStatus::Ok);
            assert!((p - 0.0039).abs() < 2e-4);
            assert_eq!(cvt_two_mode_entropy(ent, &mut bits), CvtStatus::Ok);
            assert!(bits > 3.0);

            let dim = cvt_two_mode_dim(ent);
            let (mut re, mut im) = (vec![0.0; dim * dim], vec![0.0; dim * dim]);
            assert_eq!(cvt_two_mode_coeffs(ent, re.as_mut_ptr(), im.as_mut_ptr(), dim * dim), CvtStatus::Ok);
            // the heralded state keeps the diagonal photon-number pairing
            assert_eq!(re[1], 0.0);
            assert!(re[dim + 1] != 0.0);
            cvt_two_mode_free(ent);
        }
    }

    #[test]
    fn averaged_teleportation_through_handles() {
        let (mut cat, mut ent, mut rho) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        unsafe {
            assert_eq!(cvt_odd_cat_new(0.0, 1.5, 48, &mut cat), CvtStatus::Ok);
            assert_eq!(cvt_tmsv_new(0.8178, 48, &mut ent), CvtStatus::Ok);
            assert_eq!(cvt_teleport_average(cat, ent, 3.0, 24, &mut rho), CvtStatus::GridTruncation);
            assert!(rho.is_null());
            assert_eq!(cvt_teleport_average(cat, ent, 8.0, 64, &mut rho), CvtStatus::Ok);

            let (mut trace, mut f, mut w) = (0.0, 0.0, 0.0);
            assert_eq!(cvt_density_matrix_trace(rho, &mut trace), CvtStatus::Ok);
            assert!((trace - 1.0).abs() < 1e-4);
            assert_eq!(cvt_density_matrix_fidelity(rho, cat, &mut f), CvtStatus::Ok);
            assert!((f - 0.649).abs() < 1e-3, "{f}");
            assert_eq!(cvt_density_matrix_wigner(rho, 0.0, 0.0, &mut w), CvtStatus::Ok);
            assert!(w.is_finite());

            let n = cvt_density_matrix_dim(rho);
            let (mut re, mut im) = (vec![0.0; n * n], vec![0.0; n * n]);
            assert_eq!(cvt_density_matrix_elements(rho, re.as_mut_ptr(), im.as_mut_ptr(), n * n), CvtStatus::Ok);
            assert!((re[n + 2] - re[2 * n + 1]).abs() < 1e-14);
            assert!((im[n + 2] + im[2 * n + 1]).abs() < 1e-14);

            let (mut density, mut cond) = (0.0, 0.0);
            assert_eq!(cvt_teleport_outcome(cat, ent, 0.2, -0.4, &mut density, &mut cond), CvtStatus::Ok);
            assert!(density > 0.0 && cond > 0.0 && cond <= 1.0);

            cvt_density_matrix_free(rho);
            cvt_two_mode_free(ent);
            cvt_single_mode_free(cat);
        }
    }

    #[test]
    fn free_accepts_null() {
        unsafe {
            cvt_single_mode_free(ptr::null_mut());
            cvt_two_mode_free(ptr::null_mut());
            cvt_density_matrix_free(ptr::null_mut());
        }
    }
}
