//! C ABI over `vpdetect`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`VpdStatus`] code; the message of the last failure on the calling thread
//! is available from [`vpd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vpdetect::cli::TRAJECTORY_COLUMNS;
use vpdetect::config::{parse_config, Preset, RunConfig};
use vpdetect::protocol::{find_limiting_cycle, run_cycle, CycleResult, Scenario};
use vpdetect::rabi::{ground_state_analysis, RabiParams};
use vpdetect::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VpdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParameter = 3,
    Config = 4,
    Numerical = 5,
    NotConverged = 6,
    ContractViolation = 7,
    BufferTooSmall = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque protocol scenario.
pub struct VpdScenario {
    inner: Scenario,
}

/// Opaque result of one cycle.
pub struct VpdCycle {
    inner: CycleResult,
    iterations: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VpdCycleScalars {
    pub photons_total: f64,
    pub photons_thermal: f64,
    pub vp_pairs_detected: f64,
    pub j_total: f64,
    pub j_thermal: f64,
    pub j_extra: f64,
    pub kappa_mean: f64,
    pub n_thermal: f64,
    pub t_m: f64,
    /// NaN when the meter is always on.
    pub p2_at_switch: f64,
    pub final_populations: [f64; 4],
    /// 1 for a single cycle, otherwise the limiting-cycle iteration count.
    pub iterations: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VpdRabiGroundState {
    /// In units of the mode frequency.
    pub energy_e0: f64,
    pub gap: f64,
    pub overlap0_sq: f64,
    pub overlap2_sq: f64,
    pub mean_photons: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VpdStatus {
    match e {
        Error::InvalidParameter(_) => VpdStatus::InvalidParameter,
        Error::Config(_) => VpdStatus::Config,
        Error::ContractViolation(_) => VpdStatus::ContractViolation,
        Error::CycleNotConverged { .. } | Error::TruncationNotConverged { .. } => VpdStatus::NotConverged,
        Error::Io(_) => VpdStatus::Io,
        _ => VpdStatus::Numerical,
    }
}

/// Clears the error slot, runs `f` and converts failures and panics to codes.
fn guard(f: impl FnOnce() -> Result<(), (VpdStatus, String)>) -> VpdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VpdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside vpdetect".into());
            VpdStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (VpdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (VpdStatus, String) {
    (VpdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (VpdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VpdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn cycle_scenario(config: RunConfig) -> Result<Scenario, (VpdStatus, String)> {
    config
        .cycle()
        .map(|t| t.scenario())
        .ok_or_else(|| (VpdStatus::Config, "configuration does not describe a cycle".into()))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn vpd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Scenario of a named preset (`fig1b`, `fig2a`, `fig2b`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vpd_scenario_preset(name: *const c_char, out: *mut *mut VpdScenario) -> VpdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let preset: Preset = read_str(name, "name")?.parse().map_err(lib_err)?;
        let scenario = cycle_scenario(RunConfig::preset(preset).map_err(lib_err)?)?;
        *out = Box::into_raw(Box::new(VpdScenario { inner: scenario }));
        Ok(())
    })
}

/// Scenario from a TOML configuration document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vpd_scenario_from_toml(text: *const c_char, out: *mut *mut VpdScenario) -> VpdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = parse_config(read_str(text, "text")?).map_err(lib_err)?;
        let scenario = cycle_scenario(config)?;
        *out = Box::into_raw(Box::new(VpdScenario { inner: scenario }));
        Ok(())
    })
}

/// Sets one numeric parameter by name (the sweep axis names).
///
/// # Safety
/// `scenario` must come from this library; `axis` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vpd_scenario_set(scenario: *mut VpdScenario, axis: *const c_char, value: f64) -> VpdStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let axis = read_str(axis, "axis")?;
        s.inner = s.inner.with_axis(axis, value).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn vpd_scenario_free(scenario: *mut VpdScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vpd_run_cycle(scenario: *const VpdScenario, out: *mut *mut VpdCycle) -> VpdStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = run_cycle(&s.inner).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VpdCycle { inner: r, iterations: 1 }));
        Ok(())
    })
}

/// Iterates cycles until the state returns to itself within `tol`.
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vpd_limiting_cycle(
    scenario: *const VpdScenario,
    tol: f64,
    max_iter: u32,
    out: *mut *mut VpdCycle,
) -> VpdStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let lc = find_limiting_cycle(&s.inner, tol, max_iter as usize).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VpdCycle {
            inner: lc.cycle,
            iterations: lc.iterations as u32,
        }));
        Ok(())
    })
}

/// # Safety
/// `cycle` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn vpd_cycle_free(cycle: *mut VpdCycle) {
    if !cycle.is_null() {
        drop(Box::from_raw(cycle));
    }
}

/// # Safety
/// `cycle` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vpd_cycle_scalars(cycle: *const VpdCycle, out: *mut VpdCycleScalars) -> VpdStatus {
    guard(|| {
        let c = cycle.as_ref().ok_or_else(|| null("cycle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = &c.inner;
        let p = r.final_state.populations();
        *out = VpdCycleScalars {
            photons_total: r.photons_total,
            photons_thermal: r.photons_thermal,
            vp_pairs_detected: r.vp_pairs_detected,
            j_total: r.j_total,
            j_thermal: r.j_thermal,
            j_extra: r.j_extra,
            kappa_mean: r.kappa_mean,
            n_thermal: r.n_thermal,
            t_m: r.t_m,
            p2_at_switch: r.p2_at_switch.unwrap_or(f64::NAN),
            final_populations: [p[0], p[1], p[2], p[3]],
            iterations: c.iterations,
        };
        Ok(())
    })
}

/// Number of samples in the trajectory, 0 for a null handle.
///
/// # Safety
/// `cycle` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn vpd_cycle_len(cycle: *const VpdCycle) -> usize {
    cycle.as_ref().map_or(0, |c| c.inner.trajectory.times.len())
}

/// Copies a trajectory column (`t`, `P0`, `P1`, `P2`, `PPhi`, `n_exp`,
/// `photons_cum`, `vp_conv`, `omega_s`, `omega_p`, `kappa`) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles; `name` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vpd_cycle_column(
    cycle: *const VpdCycle,
    name: *const c_char,
    buf: *mut f64,
    len: usize,
) -> VpdStatus {
    guard(|| {
        let c = cycle.as_ref().ok_or_else(|| null("cycle"))?;
        let name = read_str(name, "name")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let traj = &c.inner.trajectory;
        let col: &[f64] = if name == "t" {
            &traj.times
        } else if TRAJECTORY_COLUMNS.contains(&name) {
            traj.series(name)
                .ok_or_else(|| (VpdStatus::ContractViolation, format!("missing series {name}")))?
        } else {
            return Err((VpdStatus::InvalidArgument, format!("unknown column '{name}'")));
        };
        if len < col.len() {
            return Err((
                VpdStatus::BufferTooSmall,
                format!("column needs {} entries, buffer holds {len}", col.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, col.len()).copy_from_slice(col);
        Ok(())
    })
}

/// Ground state of the two-level quantum Rabi model with `n_fock` photon states.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vpd_rabi_ground_state(
    epsilon: f64,
    g: f64,
    n_fock: u32,
    out: *mut VpdRabiGroundState,
) -> VpdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = RabiParams::new(epsilon, g, n_fock as usize).map_err(lib_err)?;
        let gs = ground_state_analysis(&params).map_err(lib_err)?;
        *out = VpdRabiGroundState {
            energy_e0: gs.energy_e0,
            gap: gs.gap,
            overlap0_sq: gs.overlap0_sq(),
            overlap2_sq: gs.overlap2_sq(),
            mean_photons: gs.mean_photons,
        };
        Ok(())
    })
}
