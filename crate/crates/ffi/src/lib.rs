//! C ABI over `vpcontrol`.
//!
//! Objects are opaque handles created by `*_new` functions and released by
//! the matching `*_free`. Every fallible call returns a [`VpStatus`]; the
//! message of the most recent failure on the calling thread is available
//! from [`vp_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vpcontrol::dispersion::{self, DispersionSettings, LaplaceHorizon};
use vpcontrol::{objectives, solver, ControlField, Error, ObjectiveKind, Problem, SimulationConfig, SimulationTrace};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Aliasing = 3,
    LengthMismatch = 4,
    Domain = 5,
    NoUnstableRoot = 6,
    RunFailed = 7,
    GradientFailure = 8,
    LineSearch = 9,
    Landscape = 10,
    Format = 11,
    Io = 12,
    NotRun = 13,
    Panic = 14,
}

impl From<&Error> for VpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => Self::InvalidArgument,
            Error::Aliasing { .. } => Self::Aliasing,
            Error::LengthMismatch { .. } => Self::LengthMismatch,
            Error::Domain(_) => Self::Domain,
            Error::NoUnstableRoot { .. } => Self::NoUnstableRoot,
            Error::RunFailed { .. } => Self::RunFailed,
            Error::GradientFailure { .. } => Self::GradientFailure,
            Error::LineSearch(_) => Self::LineSearch,
            Error::Landscape(_) => Self::Landscape,
            Error::Format { .. } => Self::Format,
            Error::Io(_) => Self::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: VpStatus, msg: impl Into<String>) -> VpStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> VpStatus {
    let status = VpStatus::from(&e);
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> VpStatus) -> VpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(VpStatus::Panic, "panic inside vpcontrol"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, VpStatus> {
    if s.is_null() {
        return Err(fail(VpStatus::NullPointer, "string argument is NULL"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(VpStatus::InvalidArgument, "string argument is not UTF-8"))
}

/// A configured simulation and, once run, its trace.
pub struct VpSimulation {
    config: SimulationConfig,
    trace: Option<SimulationTrace>,
}

/// A static control field `H(x) = Σ a_k cos(k k₀ x) + b_k sin(k k₀ x)`.
pub struct VpControlField {
    field: ControlField,
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a simulation from a preset name (`"two-stream"` or
/// `"bump-on-tail"`) with the preset grid, time step and horizon.
///
/// # Safety
/// `preset` must be a valid NUL-terminated string and `out` a valid pointer
/// to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_new(preset: *const c_char, out: *mut *mut VpSimulation) -> VpStatus {
    guard(|| {
        if out.is_null() {
            return fail(VpStatus::NullPointer, "out is NULL");
        }
        let name = match read_str(preset) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let problem: Problem = match name.parse() {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let sim = Box::new(VpSimulation {
            config: problem.config(),
            trace: None,
        });
        *out = Box::into_raw(sim);
        VpStatus::Ok
    })
}

/// Releases a simulation. NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or a handle from [`vp_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_free(sim: *mut VpSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn sim_mut<'a>(sim: *mut VpSimulation) -> Result<&'a mut VpSimulation, VpStatus> {
    sim.as_mut().ok_or_else(|| fail(VpStatus::NullPointer, "simulation handle is NULL"))
}

/// Overrides grid resolution, time step, final time and perturbation
/// amplitude. Clears any previous trace.
///
/// # Safety
/// `sim` must be a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_configure(
    sim: *mut VpSimulation,
    mx: usize,
    mv: usize,
    dt: f64,
    final_time: f64,
    epsilon: f64,
) -> VpStatus {
    guard(|| {
        let s = match sim_mut(sim) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let problem = match s.config.equilibrium {
            vpcontrol::EquilibriumSpec::TwoStream { .. } => Problem::TwoStream,
            vpcontrol::EquilibriumSpec::BumpOnTail { .. } => Problem::BumpOnTail,
        };
        let built = problem
            .grid_with(mx, mv)
            .and_then(|g| problem.config_with(g, dt, final_time, epsilon))
            .and_then(|c| {
                c.perturbation.validate()?;
                Ok(c)
            });
        match built {
            Ok(mut c) => {
                c.control = s.config.control.clone();
                c.control.k0 = c.grid.k0();
                s.config = c;
                s.trace = None;
                VpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Sets the control field from `n` cosine and `n` sine coefficients
/// (`n = 0` removes it). Clears any previous trace.
///
/// # Safety
/// `sim` must be a live handle; `a` and `b` must each point to `n` readable
/// doubles (they may be NULL when `n == 0`).
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_set_control(
    sim: *mut VpSimulation,
    a: *const f64,
    b: *const f64,
    n: usize,
) -> VpStatus {
    guard(|| {
        let s = match sim_mut(sim) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if n > 0 && (a.is_null() || b.is_null()) {
            return fail(VpStatus::NullPointer, "coefficient array is NULL");
        }
        let (a, b) = if n == 0 {
            (Vec::new(), Vec::new())
        } else {
            (
                std::slice::from_raw_parts(a, n).to_vec(),
                std::slice::from_raw_parts(b, n).to_vec(),
            )
        };
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return fail(VpStatus::InvalidArgument, "coefficients must be finite");
        }
        s.config.control = ControlField {
            a,
            b,
            k0: s.config.grid.k0(),
        };
        s.trace = None;
        VpStatus::Ok
    })
}

/// Applies a control field handle to the simulation.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_apply_control(sim: *mut VpSimulation, field: *const VpControlField) -> VpStatus {
    guard(|| {
        let s = match sim_mut(sim) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let Some(f) = field.as_ref() else {
            return fail(VpStatus::NullPointer, "control handle is NULL");
        };
        s.config.control = f.field.clone();
        s.config.control.k0 = s.config.grid.k0();
        s.trace = None;
        VpStatus::Ok
    })
}

/// Runs the solver, keeping the trace in the handle.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_run(sim: *mut VpSimulation) -> VpStatus {
    guard(|| {
        let s = match sim_mut(sim) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let mut cfg = s.config.clone();
        cfg.record.kl_series = true;
        cfg.record.l2_series = true;
        match solver::run(&cfg) {
            Ok(t) => {
                s.trace = Some(t);
                VpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of entries in the energy series (`n_steps + 1`), 0 before a run.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_energy_len(sim: *const VpSimulation) -> usize {
    sim.as_ref()
        .and_then(|s| s.trace.as_ref())
        .map_or(0, |t| t.energy_series.len())
}

/// Copies up to `len` energies into `buf`; `written` receives the count.
///
/// # Safety
/// `sim` must be a live handle, `buf` must hold `len` writable doubles and
/// `written` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_energy(
    sim: *const VpSimulation,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> VpStatus {
    guard(|| {
        let Some(s) = sim.as_ref() else {
            return fail(VpStatus::NullPointer, "simulation handle is NULL");
        };
        let Some(t) = &s.trace else {
            return fail(VpStatus::NotRun, "simulation has not been run");
        };
        if buf.is_null() && len > 0 {
            return fail(VpStatus::NullPointer, "buffer is NULL");
        }
        let n = len.min(t.energy_series.len());
        if n > 0 {
            ptr::copy_nonoverlapping(t.energy_series.as_ptr(), buf, n);
        }
        if let Some(w) = written.as_mut() {
            *w = n;
        }
        VpStatus::Ok
    })
}

/// Evaluates a named objective (`kl`, `ee`, `klt`, `eet`, `l2`, `l2t`) on
/// the stored trace.
///
/// # Safety
/// `sim` must be a live handle, `kind` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_objective(
    sim: *const VpSimulation,
    kind: *const c_char,
    out: *mut f64,
) -> VpStatus {
    guard(|| {
        let Some(s) = sim.as_ref() else {
            return fail(VpStatus::NullPointer, "simulation handle is NULL");
        };
        if out.is_null() {
            return fail(VpStatus::NullPointer, "out is NULL");
        }
        let kind: ObjectiveKind = match read_str(kind).map(str::parse) {
            Ok(Ok(k)) => k,
            Ok(Err(e)) => return from_error(e),
            Err(st) => return st,
        };
        let Some(t) = &s.trace else {
            return fail(VpStatus::NotRun, "simulation has not been run");
        };
        match kind.reduce(t, &s.config) {
            Ok(v) => {
                *out = v;
                VpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs a fresh simulation for the objective without touching the stored
/// trace; failures yield the sentinel `DBL_MAX` in `out` and a non-OK code.
///
/// # Safety
/// As [`vp_simulation_objective`].
#[no_mangle]
pub unsafe extern "C" fn vp_simulation_evaluate(
    sim: *const VpSimulation,
    kind: *const c_char,
    out: *mut f64,
) -> VpStatus {
    guard(|| {
        let Some(s) = sim.as_ref() else {
            return fail(VpStatus::NullPointer, "simulation handle is NULL");
        };
        if out.is_null() {
            return fail(VpStatus::NullPointer, "out is NULL");
        }
        let kind: ObjectiveKind = match read_str(kind).map(str::parse) {
            Ok(Ok(k)) => k,
            Ok(Err(e)) => return from_error(e),
            Err(st) => return st,
        };
        match objectives::try_evaluate(kind, &s.config) {
            Ok(v) => {
                *out = v;
                VpStatus::Ok
            }
            Err(e) => {
                *out = objectives::FAILED;
                from_error(e)
            }
        }
    })
}

/// Synthesizes the analytic control for the simulation's equilibrium and
/// perturbation. `converged` selects the fully converged Laplace horizon.
/// On success `root_re`/`root_im` (either may be NULL) receive the root.
///
/// # Safety
/// `sim` must be a live handle, `out` writable, and the root pointers NULL
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn vp_guess(
    sim: *const VpSimulation,
    converged: bool,
    out: *mut *mut VpControlField,
    root_re: *mut f64,
    root_im: *mut f64,
) -> VpStatus {
    guard(|| {
        let Some(s) = sim.as_ref() else {
            return fail(VpStatus::NullPointer, "simulation handle is NULL");
        };
        if out.is_null() {
            return fail(VpStatus::NullPointer, "out is NULL");
        }
        let horizon = if converged {
            LaplaceHorizon::Converged
        } else {
            LaplaceHorizon::default()
        };
        let settings = DispersionSettings::default().with_horizon(horizon);
        let c = &s.config;
        match dispersion::synthesize_guess(&c.equilibrium, &c.perturbation, &c.grid, &[c.perturbation.mode()], &settings) {
            Ok(g) => {
                if let Some(r) = g.roots.first() {
                    if let Some(p) = root_re.as_mut() {
                        *p = r.s0.re;
                    }
                    if let Some(p) = root_im.as_mut() {
                        *p = r.s0.im;
                    }
                }
                *out = Box::into_raw(Box::new(VpControlField { field: g.field }));
                VpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of Fourier modes N of a control field (0 for NULL).
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vp_control_field_order(field: *const VpControlField) -> usize {
    field.as_ref().map_or(0, |f| f.field.order())
}

/// Copies the coefficients into `a` and `b`, each holding `n >= N` doubles.
///
/// # Safety
/// `field` must be a live handle; `a` and `b` must hold `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vp_control_field_coefficients(
    field: *const VpControlField,
    a: *mut f64,
    b: *mut f64,
    n: usize,
) -> VpStatus {
    guard(|| {
        let Some(f) = field.as_ref() else {
            return fail(VpStatus::NullPointer, "control handle is NULL");
        };
        let order = f.field.order();
        if n < order {
            return fail(VpStatus::LengthMismatch, format!("buffers hold {n} values, field has {order}"));
        }
        if order > 0 {
            if a.is_null() || b.is_null() {
                return fail(VpStatus::NullPointer, "coefficient buffer is NULL");
            }
            ptr::copy_nonoverlapping(f.field.a.as_ptr(), a, order);
            ptr::copy_nonoverlapping(f.field.b.as_ptr(), b, order);
        }
        VpStatus::Ok
    })
}

/// Evaluates `H(x)`; NaN for a NULL handle.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vp_control_field_eval(field: *const VpControlField, x: f64) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.field.eval(x))
}

/// Releases a control field. NULL is ignored.
///
/// # Safety
/// `field` must be NULL or a handle from [`vp_guess`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vp_control_field_free(field: *mut VpControlField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}
