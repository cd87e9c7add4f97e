//! C ABI over the simulator. Objects cross the boundary as opaque handles;
//! every call returns an [`NsStatus`] and leaves a message retrievable with
//! [`ns_last_error`] on failure. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use neusis_sim::mission::{generate_scenario, load_scenario, GeneratorConfig, Scenario};
use neusis_sim::runner::{run_mission, EndReason, MissionConfig, MissionTrace, TraceRecord};
use neusis_sim::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad configuration or JSON.
    Config = 3,
    /// Scenario parse, validation or generation failure.
    Scenario = 4,
    Io = 5,
    /// The mission broke a runtime invariant (see the trace's violation record).
    Invariant = 6,
    Panic = 7,
}

impl From<&Error> for NsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) | Error::Trace(_) => NsStatus::Config,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::GridFormat(_)
            | Error::Generation(_) => NsStatus::Scenario,
            Error::Invariant(_) => NsStatus::Invariant,
            Error::Io { .. } => NsStatus::Io,
        }
    }
}

/// How a mission ended, as reported by [`ns_trace_end_reason`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsEndReason {
    Unknown = 0,
    EoisFound = 1,
    BudgetExhausted = 2,
    PlanEmpty = 3,
    Violation = 4,
}

/// Opaque scenario handle.
pub struct NsScenario(Scenario);

/// Opaque mission configuration handle.
pub struct NsConfig(MissionConfig);

/// Opaque mission trace handle.
pub struct NsTrace(MissionTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), (NsStatus, String)>) -> NsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NsStatus::Panic
        }
    }
}

fn core(e: Error) -> (NsStatus, String) {
    (NsStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (NsStatus, String) {
    (NsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (NsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (NsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut *mut T, what: &str) -> Result<&'a mut *mut T, (NsStatus, String)> {
    let r = p.as_mut().ok_or_else(|| null(what))?;
    *r = ptr::null_mut();
    Ok(r)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (NsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ns_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_load(
    path: *const c_char,
    out: *mut *mut NsScenario,
) -> NsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let s = load_scenario(Path::new(path)).map_err(core)?;
        *out = Box::into_raw(Box::new(NsScenario(s)));
        Ok(())
    })
}

/// Generates a scenario with the default generator settings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_generate(seed: u64, out: *mut *mut NsScenario) -> NsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = generate_scenario(seed, &GeneratorConfig::default()).map_err(core)?;
        *out = Box::into_raw(Box::new(NsScenario(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be a live scenario handle or null.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_aoi_count(s: *const NsScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.aois.len())
}

/// # Safety
/// `s` must be a live scenario handle or null.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_eoi_count(s: *const NsScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.eois.len())
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ns_scenario_free(s: *mut NsScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Mission configuration from JSON (missing keys take defaults). Null or an
/// empty string gives the default configuration.
///
/// # Safety
/// `json` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_config_from_json(
    json: *const c_char,
    out: *mut *mut NsConfig,
) -> NsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = if json.is_null() {
            ""
        } else {
            str_arg(json, "json")?
        };
        let cfg: MissionConfig = if text.trim().is_empty() {
            MissionConfig::default()
        } else {
            serde_json::from_str(text)
                .map_err(|e| (NsStatus::Config, format!("config json: {e}")))?
        };
        cfg.check().map_err(core)?;
        *out = Box::into_raw(Box::new(NsConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ns_config_free(c: *mut NsConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs one mission. A mission that breaks an invariant still yields a trace
/// and returns `Invariant`; `out` then holds that trace.
///
/// # Safety
/// `scenario` and `config` must be live handles; `name` null or NUL-terminated;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ns_run_mission(
    scenario: *const NsScenario,
    config: *const NsConfig,
    name: *const c_char,
    out: *mut *mut NsTrace,
) -> NsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = handle(scenario, "scenario")?;
        let c = handle(config, "config")?;
        let name = if name.is_null() {
            "scenario"
        } else {
            str_arg(name, "name")?
        };
        let trace = run_mission(&s.0, &c.0, name).map_err(core)?;
        let violation = trace.violation().map(str::to_string);
        *out = Box::into_raw(Box::new(NsTrace(trace)));
        match violation {
            Some(v) => Err((NsStatus::Invariant, v)),
            None => Ok(()),
        }
    })
}

/// # Safety
/// `t` must be a live trace handle or null.
#[no_mangle]
pub unsafe extern "C" fn ns_trace_end_reason(t: *const NsTrace) -> NsEndReason {
    match t.as_ref().and_then(|t| t.0.end_reason()) {
        Some(EndReason::EoisFound) => NsEndReason::EoisFound,
        Some(EndReason::BudgetExhausted) => NsEndReason::BudgetExhausted,
        Some(EndReason::PlanEmpty) => NsEndReason::PlanEmpty,
        Some(EndReason::Violation) => NsEndReason::Violation,
        None => NsEndReason::Unknown,
    }
}

/// Number of sensing frames in the trace.
///
/// # Safety
/// `t` must be a live trace handle or null.
#[no_mangle]
pub unsafe extern "C" fn ns_trace_frame_count(t: *const NsTrace) -> usize {
    t.as_ref().map_or(0, |t| t.0.frames().count())
}

/// Number of EOIs confirmed by the end of the mission.
///
/// # Safety
/// `t` must be a live trace handle or null.
#[no_mangle]
pub unsafe extern "C" fn ns_trace_found_count(t: *const NsTrace) -> usize {
    let Some(t) = t.as_ref() else { return 0 };
    t.0.records
        .iter()
        .find_map(|r| match r {
            TraceRecord::Outcome { found, .. } => Some(found.iter().filter(|f| f.found).count()),
            _ => None,
        })
        .unwrap_or(0)
}

/// Writes the trace as JSON lines (plus its stats sidecar) to `path`.
///
/// # Safety
/// `t` must be a live trace handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ns_trace_write(t: *const NsTrace, path: *const c_char) -> NsStatus {
    guard(|| {
        let t = handle(t, "trace")?;
        let path = str_arg(path, "path")?;
        t.0.write(Path::new(path)).map_err(core)
    })
}

/// The trace as a JSON-lines string; release it with [`ns_string_free`].
///
/// # Safety
/// `t` must be a live trace handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ns_trace_to_jsonl(t: *const NsTrace, out: *mut *mut c_char) -> NsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = handle(t, "trace")?;
        let s = CString::new(t.0.to_jsonl())
            .map_err(|_| (NsStatus::Config, "trace contains NUL".to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `t` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ns_trace_free(t: *mut NsTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `s` must come from [`ns_trace_to_jsonl`] and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ns_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
