//! C ABI over the spinsqueeze library.
//!
//! States are exposed as opaque `SsqSpinState` handles owned by the caller and
//! released with `ssq_spin_state_free`. Every fallible call returns an
//! `SsqStatus`; the message for the most recent failure on the calling thread
//! is available from `ssq_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use spinsqueeze::gate::{gate_as_squeezer, phase_vs_m, GateParams};
use spinsqueeze::{Axis, DickeBasis, Error, SpinState};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsqStatus {
    Ok = 0,
    InvalidArgument = 1,
    DegenerateDirection = 2,
    CutoffOverflow = 3,
    StepSize = 4,
    OpenLoop = 5,
    Resource = 6,
    NullPointer = 7,
    Panic = 8,
}

/// Rotation axis.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsqAxis {
    X = 0,
    Y = 1,
    Z = 2,
}

/// Opaque collective spin state.
pub struct SsqSpinState {
    inner: SpinState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> SsqStatus {
    match err {
        Error::InvalidArgument(_) => SsqStatus::InvalidArgument,
        Error::DegenerateDirection { .. } => SsqStatus::DegenerateDirection,
        Error::CutoffOverflow { .. } => SsqStatus::CutoffOverflow,
        Error::StepSize(_) => SsqStatus::StepSize,
        Error::OpenLoop { .. } => SsqStatus::OpenLoop,
        Error::Resource(_) => SsqStatus::Resource,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F>(body: F) -> SsqStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SsqStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer passed for '{name}'"));
            SsqStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            SsqStatus::Panic
        }
    }
}

unsafe fn state_ref<'a>(
    p: *const SsqSpinState,
    name: &'static str,
) -> Result<&'a SpinState, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or(Failure::Null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

fn boxed(state: SpinState) -> *mut SsqSpinState {
    Box::into_raw(Box::new(SsqSpinState { inner: state }))
}

fn particles_from(n: u32) -> Result<usize, Failure> {
    Ok(DickeBasis::new(n as usize)?.particles())
}

/// Coherent spin state of `n` particles with mean spin along +x.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ssq_coherent_state(n: u32, out: *mut *mut SsqSpinState) -> SsqStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let state = spinsqueeze::coherent_state(particles_from(n)?)?;
        write_out(out, boxed(state), "out")
    })
}

/// Dicke basis state `index` (0 is M = +N/2) of `n` particles.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ssq_dicke_state(
    n: u32,
    index: usize,
    out: *mut *mut SsqSpinState,
) -> SsqStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let state = SpinState::basis_state(DickeBasis::new(n as usize)?, index)?;
        write_out(out, boxed(state), "out")
    })
}

/// State from `len = n + 1` complex amplitudes given as separate real and
/// imaginary arrays. The vector is normalized on input.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssq_spin_state_from_amplitudes(
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut SsqSpinState,
) -> SsqStatus {
    guard(|| {
        if re.is_null() {
            return Err(Failure::Null("re"));
        }
        if im.is_null() {
            return Err(Failure::Null("im"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if len < 2 {
            return Err(Error::InvalidArgument(format!(
                "amplitude length must be at least 2, got {len}"
            ))
            .into());
        }
        let re = std::slice::from_raw_parts(re, len);
        let im = std::slice::from_raw_parts(im, len);
        let amps: Vec<Complex64> = re
            .iter()
            .zip(im)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        let basis = DickeBasis::new(len - 1)?;
        let state = SpinState::normalized(basis, amps)?;
        write_out(out, boxed(state), "out")
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `state` must be null or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssq_spin_state_free(state: *mut SsqSpinState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Hilbert-space dimension N + 1, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssq_spin_state_dim(state: *const SsqSpinState) -> usize {
    state.as_ref().map_or(0, |h| h.inner.basis().dim())
}

/// Copies amplitudes into `re` and `im`; `len` must equal the dimension.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ssq_spin_state_amplitudes(
    state: *const SsqSpinState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SsqStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        if re.is_null() {
            return Err(Failure::Null("re"));
        }
        if im.is_null() {
            return Err(Failure::Null("im"));
        }
        let dim = s.basis().dim();
        if len != dim {
            return Err(Error::InvalidArgument(format!(
                "buffer length {len} does not match dimension {dim}"
            ))
            .into());
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (k, a) in s.amplitudes().iter().enumerate() {
            re[k] = a.re;
            im[k] = a.im;
        }
        Ok(())
    })
}

/// One-axis twisting exp(-i chi_t Jz^2) applied to `state`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssq_oat_evolve(
    state: *const SsqSpinState,
    chi_t: f64,
    out: *mut *mut SsqSpinState,
) -> SsqStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let evolved = spinsqueeze::oat_evolve(s, chi_t)?;
        write_out(out, boxed(evolved), "out")
    })
}

/// Rotation exp(-i angle J_axis) applied to `state`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssq_rotate(
    state: *const SsqSpinState,
    axis: SsqAxis,
    angle: f64,
    out: *mut *mut SsqSpinState,
) -> SsqStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let axis = match axis {
            SsqAxis::X => Axis::X,
            SsqAxis::Y => Axis::Y,
            SsqAxis::Z => Axis::Z,
        };
        let rotated = spinsqueeze::rotate(s, axis, angle)?;
        write_out(out, boxed(rotated), "out")
    })
}

/// Squeezing parameter: minimum tangent-plane standard deviation over the
/// coherent-state value sqrt(J/2).
///
/// # Safety
/// `state` must be a live handle; `xi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssq_squeezing_xi(state: *const SsqSpinState, xi: *mut f64) -> SsqStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        let value = spinsqueeze::squeezing_xi(s)?;
        write_out(xi, value, "xi")
    })
}

/// Noise reduction 10 log10(var_squeezed / var_unsqueezed).
///
/// # Safety
/// `db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssq_squeezing_db(
    var_squeezed: f64,
    var_unsqueezed: f64,
    db: *mut f64,
) -> SsqStatus {
    guard(|| {
        let value = spinsqueeze::squeezing_db(var_squeezed, var_unsqueezed)?;
        write_out(db, value, "db")
    })
}

/// Runs the spin-boson gate on `state` with the oscillator starting in |0>.
///
/// Time is in units of 1/delta'. `n_max` of 0 selects the automatic Fock
/// cutoff. On success `out` receives the spin state projected onto the
/// oscillator ground state, `chi_t_eff` the equivalent twisting strength and
/// `oat_overlap` the overlap of the reduced spin state with the ideal twist.
///
/// # Safety
/// `state` must be a live handle; all output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssq_gate_as_squeezer(
    state: *const SsqSpinState,
    lambda_over_delta: f64,
    loops: u32,
    n_max: usize,
    out: *mut *mut SsqSpinState,
    chi_t_eff: *mut f64,
    oat_overlap: *mut f64,
) -> SsqStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if chi_t_eff.is_null() {
            return Err(Failure::Null("chi_t_eff"));
        }
        if oat_overlap.is_null() {
            return Err(Failure::Null("oat_overlap"));
        }
        let mut params = GateParams::from_ratio(s.basis().particles(), lambda_over_delta, loops)?;
        if n_max != 0 {
            params = params.with_n_max(n_max)?;
        }
        let report = gate_as_squeezer(&params, s)?;
        write_out(chi_t_eff, report.chi_t_eff, "chi_t_eff")?;
        write_out(oat_overlap, report.oat_overlap, "oat_overlap")?;
        write_out(out, boxed(report.spin_out), "out")
    })
}

/// Fits the gate phase to a*m^2 over all m for `n` particles and reports the
/// fitted and closed-form coefficients.
///
/// # Safety
/// `coefficient` and `analytic` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssq_gate_phase_coefficient(
    n: u32,
    lambda_over_delta: f64,
    loops: u32,
    coefficient: *mut f64,
    analytic: *mut f64,
) -> SsqStatus {
    guard(|| {
        if coefficient.is_null() {
            return Err(Failure::Null("coefficient"));
        }
        if analytic.is_null() {
            return Err(Failure::Null("analytic"));
        }
        let params = GateParams::from_ratio(particles_from(n)?, lambda_over_delta, loops)?;
        let fit = phase_vs_m(&params)?;
        write_out(coefficient, fit.coefficient, "coefficient")?;
        write_out(analytic, fit.analytic_coefficient, "analytic")
    })
}

/// Message for the last failed call on this thread, or null if the last call
/// succeeded. The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ssq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssq_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
