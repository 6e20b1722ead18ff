//! C ABI over the solver.
//!
//! Simulations are opaque handles created from a preset or a JSON scenario
//! config and released with [`netkin_simulation_free`]. Every call returns a
//! [`NetkinStatus`]; on failure [`netkin_last_error`] describes the problem.
//! Handles are not thread safe; use one handle per thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use netkin_core::engine::Simulation;
use netkin_core::scenarios::{self, ModelSpec, ScenarioConfig};
use netkin_core::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetkinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed network or config document.
    ParseError = 3,
    InvalidNetwork = 4,
    InvalidParameter = 5,
    SingularSystem = 6,
    /// The solution became non-finite or a stability limit was violated.
    Unstable = 7,
    /// Output buffer shorter than the edge's cell count.
    BufferTooSmall = 8,
    Io = 9,
    /// Internal error; the handle should be discarded.
    Panic = 10,
}

/// Opaque simulation handle.
pub struct NetkinSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> NetkinStatus {
    match err {
        Error::Syntax(_) | Error::Config(_) => NetkinStatus::ParseError,
        Error::DanglingNode { .. }
        | Error::DuplicateId { .. }
        | Error::InvalidEdge { .. }
        | Error::UnknownNode(_)
        | Error::UnknownEdge(_)
        | Error::EmptyInput(_) => NetkinStatus::InvalidNetwork,
        Error::InvalidParameter(_)
        | Error::NonRealSpectrum
        | Error::DefectiveSpectrum
        | Error::InvalidCoupling(_)
        | Error::DimensionMismatch(_)
        | Error::NegativeDensity { .. } => NetkinStatus::InvalidParameter,
        Error::SingularSystem { .. } => NetkinStatus::SingularSystem,
        Error::CflViolation { .. } | Error::StabilityViolation { .. } | Error::Unstable { .. } => {
            NetkinStatus::Unstable
        }
        Error::Io { .. } => NetkinStatus::Io,
    }
}

enum Fail {
    Status(NetkinStatus, String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NetkinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NetkinStatus::Ok
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            NetkinStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(NetkinStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail::Status(
            NetkinStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

unsafe fn handle<'a>(p: *const NetkinSimulation) -> Result<&'a NetkinSimulation, Fail> {
    p.as_ref().ok_or_else(|| null("simulation"))
}

unsafe fn handle_mut<'a>(p: *mut NetkinSimulation) -> Result<&'a mut NetkinSimulation, Fail> {
    p.as_mut().ok_or_else(|| null("simulation"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn build(config: &ScenarioConfig, model: Option<&str>) -> Result<Box<NetkinSimulation>, Fail> {
    let net = config.validate()?;
    let spec = match model {
        Some(m) => m.parse::<ModelSpec>()?,
        None => config.models[0].clone(),
    };
    let sim = Simulation::new(config.setup(&spec, &net)?)?;
    Ok(Box::new(NetkinSimulation { sim }))
}

/// Create a simulation of a built-in scenario (`"interval"`, `"tripod"` or
/// `"large"`) for one model (e.g. `"kinetic"`, `"cattaneo:density-continuity"`)
/// at scaling `epsilon`. On success `*out` owns a new handle.
///
/// # Safety
/// `preset` and `model` must be NUL-terminated strings; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_from_preset(
    preset: *const c_char,
    model: *const c_char,
    epsilon: f64,
    out: *mut *mut NetkinSimulation,
) -> NetkinStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let mut config = scenarios::preset(text(preset, "preset")?)?;
        config.epsilon = epsilon;
        let sim = build(&config, Some(text(model, "model")?))?;
        out.write(Box::into_raw(sim));
        Ok(())
    })
}

/// Create a simulation from a JSON scenario config document. `model` picks
/// the model; NULL selects the config's first model. A network given as a
/// file path is read relative to the working directory.
///
/// # Safety
/// `config_json` must be a NUL-terminated string, `model` NULL or a
/// NUL-terminated string, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_from_config(
    config_json: *const c_char,
    model: *const c_char,
    out: *mut *mut NetkinSimulation,
) -> NetkinStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let json = text(config_json, "config")?;
        let config: ScenarioConfig = serde_json::from_str(json)
            .map_err(|e| Fail::Status(NetkinStatus::ParseError, format!("config: {e}")))?;
        let model = if model.is_null() {
            None
        } else {
            Some(text(model, "model")?)
        };
        out.write(Box::into_raw(build(&config, model)?));
        Ok(())
    })
}

/// Release a handle. NULL is ignored.
///
/// # Safety
/// `sim` must come from a constructor of this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_free(sim: *mut NetkinSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance by one global time step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_step(sim: *mut NetkinSimulation) -> NetkinStatus {
    guard(|| Ok(handle_mut(sim)?.sim.step()?))
}

/// Advance to time `t`, shortening the last step to land on it.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_advance_to(
    sim: *mut NetkinSimulation,
    t: f64,
) -> NetkinStatus {
    guard(|| Ok(handle_mut(sim)?.sim.advance_to(t)?))
}

/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_time(
    sim: *const NetkinSimulation,
    out: *mut f64,
) -> NetkinStatus {
    guard(|| write_out(out, handle(sim)?.sim.time()))
}

/// The global time step chosen from the stability limits.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_dt(
    sim: *const NetkinSimulation,
    out: *mut f64,
) -> NetkinStatus {
    guard(|| write_out(out, handle(sim)?.sim.dt()))
}

/// Total cell mass on the network.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_total_mass(
    sim: *const NetkinSimulation,
    out: *mut f64,
) -> NetkinStatus {
    guard(|| write_out(out, handle(sim)?.sim.total_mass()))
}

/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_edge_count(
    sim: *const NetkinSimulation,
    out: *mut usize,
) -> NetkinStatus {
    guard(|| write_out(out, handle(sim)?.sim.network().edges().len()))
}

fn edge_cells(sim: &Simulation, edge: usize) -> Result<usize, Fail> {
    Ok(sim.network().edge(edge)?.cells)
}

/// Number of cells on edge `edge` (0-based position, not id).
///
/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_cell_count(
    sim: *const NetkinSimulation,
    edge: usize,
    out: *mut usize,
) -> NetkinStatus {
    guard(|| write_out(out, edge_cells(&handle(sim)?.sim, edge)?))
}

unsafe fn copy_cells(buf: *mut f64, len: usize, values: &[f64]) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < values.len() {
        return Err(Fail::Status(
            NetkinStatus::BufferTooSmall,
            format!("buffer holds {len} values, edge has {}", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Copy the cell densities of edge `edge` into `buf` (at least
/// `cell_count` entries).
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_density(
    sim: *const NetkinSimulation,
    edge: usize,
    buf: *mut f64,
    len: usize,
) -> NetkinStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        edge_cells(s, edge)?;
        copy_cells(buf, len, &s.density(edge))
    })
}

/// Copy the chemoattractant of edge `edge` into `buf`.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn netkin_simulation_chemoattractant(
    sim: *const NetkinSimulation,
    edge: usize,
    buf: *mut f64,
    len: usize,
) -> NetkinStatus {
    guard(|| {
        let s = &handle(sim)?.sim;
        edge_cells(s, edge)?;
        copy_cells(buf, len, s.chemoattractant(edge))
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn netkin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn netkin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
