//! C ABI over the nlcl solver.
//!
//! A simulation is an opaque handle created from scenario text and released
//! with `nlcl_simulation_free`. Every call returns an [`NlclStatus`]; on
//! failure `nlcl_last_error_message` describes the error on the calling
//! thread. Panics never cross the boundary.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nlcl::commands::oracle_command;
use nlcl::config::ScenarioConfig;
use nlcl::grid::integrate;
use nlcl::scenario::Scenario;
use nlcl::solver::{BlowUp, Solver, State};
use nlcl::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlclStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    Blowup = 3,
    Io = 4,
    Panic = 5,
}

/// Opaque simulation handle.
pub struct NlclSimulation {
    scenario: Scenario,
    solver: Solver,
    state: State,
    halted: Option<BlowUp>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: NlclStatus, msg: impl Into<String>) -> NlclStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> NlclStatus {
    let status = match e {
        Error::Io { .. } | Error::Format(_) => NlclStatus::Io,
        Error::Config { .. } | Error::Parse { .. } | Error::Mismatch(_) => NlclStatus::Config,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> NlclStatus) -> NlclStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(NlclStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nlcl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a simulation from scenario text (the `.cfg` format) at its initial
/// datum.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_new(
    config_text: *const c_char,
    out: *mut *mut NlclSimulation,
) -> NlclStatus {
    guard(|| {
        if config_text.is_null() || out.is_null() {
            return fail(NlclStatus::InvalidArgument, "null argument");
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(config_text).to_str() {
            Ok(t) => t,
            Err(_) => return fail(NlclStatus::InvalidArgument, "config text is not UTF-8"),
        };
        let built = ScenarioConfig::from_text(text, Path::new("<ffi>"))
            .and_then(Scenario::new)
            .and_then(|scenario| {
                let solver = scenario.solver()?;
                let state = solver.initial_state();
                Ok(NlclSimulation {
                    scenario,
                    solver,
                    state,
                    halted: None,
                })
            });
        match built {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(sim));
                NlclStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `sim` must come from `nlcl_simulation_new` and not be used afterwards.
/// NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_free(sim: *mut NlclSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn sim_mut<'a>(sim: *mut NlclSimulation) -> Result<&'a mut NlclSimulation, NlclStatus> {
    sim.as_mut()
        .ok_or_else(|| fail(NlclStatus::InvalidArgument, "null simulation"))
}

unsafe fn sim_ref<'a>(sim: *const NlclSimulation) -> Result<&'a NlclSimulation, NlclStatus> {
    sim.as_ref()
        .ok_or_else(|| fail(NlclStatus::InvalidArgument, "null simulation"))
}

impl NlclSimulation {
    fn advance(&mut self, limit: f64) -> NlclStatus {
        if let Some(b) = &self.halted {
            return fail(NlclStatus::Blowup, b.to_string());
        }
        let dt = match self.solver.unclamped_dt(&self.state) {
            Ok(dt) => dt.min(limit),
            Err(b) => return self.halt(b),
        };
        if !(dt > 0.0) {
            return fail(
                NlclStatus::InvalidArgument,
                format!("step size {dt} is not positive"),
            );
        }
        match self.solver.advance(&self.state, dt) {
            Ok(next) => {
                self.state = next;
                NlclStatus::Ok
            }
            Err(b) => self.halt(b),
        }
    }

    fn halt(&mut self, b: BlowUp) -> NlclStatus {
        let status = fail(NlclStatus::Blowup, b.to_string());
        self.halted = Some(b);
        status
    }
}

/// Takes one step (fixed or CFL-limited); writes its length to `dt_taken`
/// when non-NULL.
///
/// # Safety
/// `sim` must be a live handle; `dt_taken` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_step(
    sim: *mut NlclSimulation,
    dt_taken: *mut f64,
) -> NlclStatus {
    guard(|| {
        let sim = match sim_mut(sim) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let t0 = sim.state.t;
        let status = sim.advance(f64::INFINITY);
        if let Some(out) = dt_taken.as_mut() {
            *out = sim.state.t - t0;
        }
        status
    })
}

/// Steps until the simulation time reaches `t_target`; the last step is
/// shortened to land on it.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_run(
    sim: *mut NlclSimulation,
    t_target: f64,
) -> NlclStatus {
    guard(|| {
        let sim = match sim_mut(sim) {
            Ok(s) => s,
            Err(e) => return e,
        };
        if !t_target.is_finite() {
            return fail(NlclStatus::InvalidArgument, "t_target must be finite");
        }
        let tol = 1e-12 * t_target.abs().max(1.0);
        while sim.state.t < t_target - tol {
            let status = sim.advance(t_target - sim.state.t);
            if status != NlclStatus::Ok {
                return status;
            }
        }
        NlclStatus::Ok
    })
}

/// # Safety
/// `sim` must be a live handle and `t` valid.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_time(
    sim: *const NlclSimulation,
    t: *mut f64,
) -> NlclStatus {
    guard(|| match (sim_ref(sim), t.as_mut()) {
        (Ok(s), Some(t)) => {
            *t = s.state.t;
            NlclStatus::Ok
        }
        (Err(e), _) => e,
        (_, None) => fail(NlclStatus::InvalidArgument, "null output"),
    })
}

/// Grid size and component count.
///
/// # Safety
/// `sim` must be a live handle; outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_dims(
    sim: *const NlclSimulation,
    nx: *mut usize,
    ny: *mut usize,
    components: *mut usize,
) -> NlclStatus {
    guard(|| {
        let s = match sim_ref(sim) {
            Ok(s) => s,
            Err(e) => return e,
        };
        match (nx.as_mut(), ny.as_mut(), components.as_mut()) {
            (Some(a), Some(b), Some(c)) => {
                *a = s.scenario.grid.nx;
                *b = s.scenario.grid.ny;
                *c = s.state.field.n_components();
                NlclStatus::Ok
            }
            _ => fail(NlclStatus::InvalidArgument, "null output"),
        }
    })
}

/// Copies component `c` (row-major, `x1` fastest) into `buf` of length `len`,
/// which must equal `nx * ny`.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_copy_component(
    sim: *const NlclSimulation,
    component: usize,
    buf: *mut f64,
    len: usize,
) -> NlclStatus {
    guard(|| {
        let s = match sim_ref(sim) {
            Ok(s) => s,
            Err(e) => return e,
        };
        if buf.is_null() {
            return fail(NlclStatus::InvalidArgument, "null buffer");
        }
        let Some(values) = s.state.field.values.get(component) else {
            return fail(
                NlclStatus::InvalidArgument,
                format!("no component {component}"),
            );
        };
        if len != values.len() {
            return fail(
                NlclStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", values.len()),
            );
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(values);
        NlclStatus::Ok
    })
}

/// Integral of component `c` over the grid.
///
/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nlcl_simulation_integrate(
    sim: *const NlclSimulation,
    component: usize,
    out: *mut f64,
) -> NlclStatus {
    guard(|| {
        let s = match sim_ref(sim) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let Some(out) = out.as_mut() else {
            return fail(NlclStatus::InvalidArgument, "null output");
        };
        match integrate(&s.state.field, component, &s.scenario.grid) {
            Ok(v) => {
                *out = v;
                NlclStatus::Ok
            }
            Err(e) => fail(NlclStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Largest FFT-versus-direct deviation (value or gradient) on an `n x n`
/// random field.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nlcl_oracle_deviation(n: usize, seed: u64, out: *mut f64) -> NlclStatus {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return fail(NlclStatus::InvalidArgument, "null output");
        };
        match oracle_command(&[n], seed) {
            Ok(rows) => {
                *out = rows[0].value_deviation.max(rows[0].gradient_deviation);
                NlclStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}
