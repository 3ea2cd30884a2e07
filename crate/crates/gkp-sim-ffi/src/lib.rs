//! C ABI over `gkp-sim`.
//!
//! Handles are opaque pointers created by `*_new` functions and released with the matching
//! `*_free`. Every fallible call returns a [`GkpStatus`]; on failure a message is kept per
//! thread and can be read with [`gkp_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::OnceLock;

use num_complex::Complex64;

use gkp_sim::circuits::Linear3Angles;
use gkp_sim::grn::theta3;
use gkp_sim::phase_space::{displacement_ev, evaluate_wigner};
use gkp_sim::pipelines::{bell_scenario, linear3_scenario, linear3_witnesses, Scenario};
use gkp_sim::states::{bred_gkp, squeezed_cat};
use gkp_sim::{BreedingParams, EvalOptions, GaussianSumState, SimError, StabilizerSpec};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GkpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotSymplectic = 4,
    ZeroProbability = 5,
    Numerical = 6,
    Panic = 7,
}

/// A sum-of-Gaussians state.
pub struct GkpState(GaussianSumState);

/// Bred inputs, a circuit and a homodyne measurement.
pub struct GkpScenario(Scenario);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &SimError) -> GkpStatus {
    match e {
        SimError::Dimension(_) => GkpStatus::DimensionMismatch,
        SimError::InvalidParameter(_) | SimError::Domain(_) | SimError::Coverage(_) => GkpStatus::InvalidArgument,
        SimError::NotSymplectic(_) => GkpStatus::NotSymplectic,
        SimError::ZeroProbability => GkpStatus::ZeroProbability,
        SimError::NotPositiveDefinite(_) | SimError::SingularMeasurement(_) | SimError::Truncation(_) => {
            GkpStatus::Numerical
        }
    }
}

enum Failure {
    Null(&'static str),
    Sim(SimError),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::Sim(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GkpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            GkpStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GkpStatus::NullPointer
        }
        Ok(Err(Failure::Sim(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            GkpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn array<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn write_complex(z: Complex64, re: &mut f64, im: &mut f64) {
    *re = z.re;
    *im = z.im;
}

/// Copies the last error message on this thread into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gkp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static NUL-terminated string identifying the sign and ordering conventions.
#[no_mangle]
pub extern "C" fn gkp_convention_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION.get_or_init(|| CString::new(gkp_sim::CONVENTION_VERSION).expect("no interior NUL")).as_ptr()
}

/// Cat amplitude that puts an `M`-round bred state on the sensor lattice.
#[no_mangle]
pub extern "C" fn gkp_sensor_amplitude(rounds: u32) -> f64 {
    BreedingParams::sensor_amplitude(rounds)
}

/// # Safety
/// `out_state` must be a valid pointer; on success it receives a handle to free with
/// [`gkp_state_free`].
#[no_mangle]
pub unsafe extern "C" fn gkp_bred_state_new(rounds: u32, amplitude: f64, squeezing: f64, out_state: *mut *mut GkpState) -> GkpStatus {
    guard(|| {
        let slot = out(out_state, "out_state")?;
        let s = bred_gkp(&BreedingParams::new(rounds, amplitude, squeezing))?;
        *slot = Box::into_raw(Box::new(GkpState(s)));
        Ok(())
    })
}

/// # Safety
/// As for [`gkp_bred_state_new`].
#[no_mangle]
pub unsafe extern "C" fn gkp_squeezed_cat_new(amplitude: f64, squeezing: f64, out_state: *mut *mut GkpState) -> GkpStatus {
    guard(|| {
        let slot = out(out_state, "out_state")?;
        *slot = Box::into_raw(Box::new(GkpState(squeezed_cat(amplitude, squeezing)?)));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gkp_state_free(state: *mut GkpState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkp_state_n_modes(state: *const GkpState) -> usize {
    state.as_ref().map_or(0, |s| s.0.n_modes())
}

/// Number of Gaussian terms, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkp_state_n_terms(state: *const GkpState) -> usize {
    state.as_ref().map_or(0, |s| s.0.len())
}

/// `⟨D(r̄)⟩` with `r̄ = (x1, p1, x2, p2, …)` of length `2 · n_modes`.
///
/// # Safety
/// `rbar` must point to `len` doubles; `out_re`/`out_im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gkp_state_displacement_ev(
    state: *const GkpState,
    rbar: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GkpStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let r = array(rbar, len, "rbar")?;
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        write_complex(displacement_ev(&s.0, r)?, re, im);
        Ok(())
    })
}

/// Wigner function at phase-space point `r` (length `2 · n_modes`).
///
/// # Safety
/// As for [`gkp_state_displacement_ev`].
#[no_mangle]
pub unsafe extern "C" fn gkp_state_wigner(
    state: *const GkpState,
    r: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GkpStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let r = array(r, len, "r")?;
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        write_complex(evaluate_wigner(&s.0, r)?, re, im);
        Ok(())
    })
}

/// Two bred inputs through the dumbbell CZ, `p` measured on the second mode.
///
/// # Safety
/// `out_scenario` must be valid; free the result with [`gkp_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn gkp_bell_scenario_new(
    rounds: u32,
    amplitude: f64,
    squeezing: f64,
    compensate: bool,
    out_scenario: *mut *mut GkpScenario,
) -> GkpStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let sc = bell_scenario(&BreedingParams::new(rounds, amplitude, squeezing), None, compensate)?;
        *slot = Box::into_raw(Box::new(GkpScenario(sc)));
        Ok(())
    })
}

/// Four bred inputs through the three-mode linear-cluster circuit with default angles.
///
/// # Safety
/// As for [`gkp_bell_scenario_new`].
#[no_mangle]
pub unsafe extern "C" fn gkp_linear3_scenario_new(
    rounds: u32,
    amplitude: f64,
    squeezing: f64,
    out_scenario: *mut *mut GkpScenario,
) -> GkpStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let p = BreedingParams::new(rounds, amplitude, squeezing);
        *slot = Box::into_raw(Box::new(GkpScenario(linear3_scenario(&p, &Linear3Angles::default(), None)?)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkp_scenario_free(scenario: *mut GkpScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Postselected `⟨D(r̄)⟩` on the unmeasured modes at `outcome`, and the outcome density.
///
/// # Safety
/// `displacement` must point to `len` doubles; all out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gkp_scenario_stabilizer_ev(
    scenario: *const GkpScenario,
    outcome: f64,
    displacement: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_density: *mut f64,
) -> GkpStatus {
    guard(|| {
        let sc = deref(scenario, "scenario")?;
        let d = array(displacement, len, "displacement")?;
        let (re, im, dens) = (out(out_re, "out_re")?, out(out_im, "out_im")?, out(out_density, "out_density")?);
        let r = sc.0.evs(outcome, &[StabilizerSpec::new(d.to_vec(), "S")], EvalOptions::default())?;
        write_complex(r[0].value, re, im);
        *dens = r[0].outcome_density;
        Ok(())
    })
}

/// Both linear-cluster witnesses at the centred outcome.
///
/// # Safety
/// `scenario` must come from [`gkp_linear3_scenario_new`]; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gkp_linear3_witnesses(scenario: *const GkpScenario, out_w: *mut f64, out_w_bar: *mut f64) -> GkpStatus {
    guard(|| {
        let sc = deref(scenario, "scenario")?;
        let (w, wb) = (out(out_w, "out_w")?, out(out_w_bar, "out_w_bar")?);
        let (a, b) = linear3_witnesses(&sc.0, EvalOptions::default())?;
        *w = a.value;
        *wb = b.value;
        Ok(())
    })
}

/// Jacobi `θ₃(z, q)`.
///
/// # Safety
/// Out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gkp_theta3(z_re: f64, z_im: f64, q: f64, out_re: *mut f64, out_im: *mut f64) -> GkpStatus {
    guard(|| {
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        write_complex(theta3(Complex64::new(z_re, z_im), q)?, re, im);
        Ok(())
    })
}
