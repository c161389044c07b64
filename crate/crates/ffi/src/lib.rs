//! C interface: an opaque environment handle driven through status codes.
//!
//! Every function returns a `PnStatus`. On failure the message is
//! available from `pn_last_error` on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pushnav::env::{make_env, Action, EnvError, EnvKind, EnvSpec, Environment};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    WrongActionMode = 3,
    NotActive = 4,
    SimulationError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnActionKind {
    /// `a` = turn rate (rad/s).
    Angular = 0,
    /// `a` = heading (rad).
    Heading = 1,
    /// `a`, `b` = left, right wheel speed (m/s).
    Wheels = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnAction {
    pub kind: PnActionKind,
    pub a: f64,
    pub b: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PnStep {
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PnPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Scores of the current episode; NaN where a score does not apply.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PnMetrics {
    pub e_nav: f64,
    pub i_nav: f64,
    pub s_manip: f64,
    pub e_manip: f64,
    pub i_manip: f64,
}

/// Opaque environment handle.
pub struct PnEnv {
    env: Environment,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn fail(status: PnStatus, msg: impl Into<String>) -> PnStatus {
    set_error(msg);
    status
}

fn env_status(e: EnvError) -> PnStatus {
    let status = match e {
        EnvError::WrongActionMode { .. } => PnStatus::WrongActionMode,
        EnvError::NotActive => PnStatus::NotActive,
        EnvError::ActionOutOfRange(_) | EnvError::Spec(_) => PnStatus::InvalidArgument,
        EnvError::Map(_) | EnvError::Placement(_) | EnvError::Physics(_) => PnStatus::SimulationError,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> PnStatus) -> PnStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(PnStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, PnStatus> {
    if p.is_null() {
        return Err(fail(PnStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(PnStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn create(spec: EnvSpec, out: *mut *mut PnEnv) -> PnStatus {
    match make_env(spec) {
        Ok(env) => {
            // SAFETY: checked non-null by the callers.
            unsafe { *out = Box::into_raw(Box::new(PnEnv { env })) };
            PnStatus::Ok
        }
        Err(e) => env_status(e),
    }
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn pn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an environment by name (`maze`, `ship_ice`, `box_delivery`,
/// `area_clearing`) with optional `key=value,...` overrides.
///
/// # Safety
/// `name` must be a NUL-terminated string, `variant` null or one, and
/// `out` a valid pointer. Free the handle with `pn_env_free`.
#[no_mangle]
pub unsafe extern "C" fn pn_env_new(name: *const c_char, variant: *const c_char, out: *mut *mut PnEnv) -> PnStatus {
    guard(|| {
        if out.is_null() {
            return fail(PnStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let name = match str_arg(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let kind: EnvKind = match name.parse() {
            Ok(k) => k,
            Err(e) => return fail(PnStatus::InvalidArgument, format!("{e}")),
        };
        let mut spec = EnvSpec::new(kind);
        if !variant.is_null() {
            let v = match str_arg(variant, "variant") {
                Ok(s) => s,
                Err(s) => return s,
            };
            if let Err(e) = spec.apply_variant(v) {
                return fail(PnStatus::InvalidArgument, e.to_string());
            }
        }
        create(spec, out)
    })
}

/// Creates an environment from a full spec in JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pn_env_from_json(json: *const c_char, out: *mut *mut PnEnv) -> PnStatus {
    guard(|| {
        if out.is_null() {
            return fail(PnStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let text = match str_arg(json, "json") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match serde_json::from_str::<EnvSpec>(text) {
            Ok(spec) => create(spec, out),
            Err(e) => fail(PnStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `env` must be null or a handle from `pn_env_new`/`pn_env_from_json`
/// not freed before.
#[no_mangle]
pub unsafe extern "C" fn pn_env_free(env: *mut PnEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

unsafe fn handle<'a>(env: *mut PnEnv) -> Result<&'a mut PnEnv, PnStatus> {
    env.as_mut().ok_or_else(|| fail(PnStatus::NullArgument, "env is null"))
}

/// Starts an episode.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pn_env_reset(env: *mut PnEnv, seed: u64) -> PnStatus {
    guard(|| match handle(env) {
        Ok(h) => h.env.reset_state(seed).map_or_else(env_status, |_| PnStatus::Ok),
        Err(s) => s,
    })
}

/// Advances one control step.
///
/// # Safety
/// `env` must be a live handle and `out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pn_env_step(env: *mut PnEnv, action: PnAction, out: *mut PnStep) -> PnStatus {
    guard(|| {
        let h = match handle(env) {
            Ok(h) => h,
            Err(s) => return s,
        };
        let action = match action.kind {
            PnActionKind::Angular => Action::Angular { omega: action.a },
            PnActionKind::Heading => Action::Heading { heading: action.a },
            PnActionKind::Wheels => Action::Wheels { left: action.a, right: action.b },
        };
        match h.env.step_with(action, false) {
            Ok(t) => {
                if let Some(o) = out.as_mut() {
                    *o = PnStep { reward: t.reward, terminated: t.terminated, truncated: t.truncated };
                }
                PnStatus::Ok
            }
            Err(e) => env_status(e),
        }
    })
}

/// Observation dimensions (channels, height, width).
///
/// # Safety
/// `env` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pn_env_observation_shape(
    env: *mut PnEnv,
    channels: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> PnStatus {
    guard(|| {
        let h = match handle(env) {
            Ok(h) => h,
            Err(s) => return s,
        };
        if channels.is_null() || height.is_null() || width.is_null() {
            return fail(PnStatus::NullArgument, "shape output is null");
        }
        let spec = h.env.spec();
        *channels = pushnav::observation::Channel::for_kind(spec.env).len();
        *height = spec.obs.size;
        *width = spec.obs.size;
        PnStatus::Ok
    })
}

/// Renders the current observation into `buf` as channel-major f32.
///
/// # Safety
/// `env` must be a live handle and `buf` valid for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn pn_env_observe(env: *mut PnEnv, buf: *mut f32, len: usize) -> PnStatus {
    guard(|| {
        let h = match handle(env) {
            Ok(h) => h,
            Err(s) => return s,
        };
        if buf.is_null() {
            return fail(PnStatus::NullArgument, "buf is null");
        }
        let obs = h.env.observe();
        if len < obs.data.len() {
            return fail(PnStatus::BufferTooSmall, format!("need {} floats, got {len}", obs.data.len()));
        }
        ptr::copy_nonoverlapping(obs.data.as_ptr(), buf, obs.data.len());
        PnStatus::Ok
    })
}

/// # Safety
/// `env` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pn_env_robot_pose(env: *mut PnEnv, out: *mut PnPose) -> PnStatus {
    guard(|| {
        let h = match handle(env) {
            Ok(h) => h,
            Err(s) => return s,
        };
        let Some(o) = out.as_mut() else { return fail(PnStatus::NullArgument, "out is null") };
        let p = h.env.robot_pose();
        *o = PnPose { x: p.x, y: p.y, theta: p.theta };
        PnStatus::Ok
    })
}

/// Scores of the episode so far (final once it has ended).
///
/// # Safety
/// `env` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pn_env_metrics(env: *mut PnEnv, out: *mut PnMetrics) -> PnStatus {
    guard(|| {
        let h = match handle(env) {
            Ok(h) => h,
            Err(s) => return s,
        };
        let Some(o) = out.as_mut() else { return fail(PnStatus::NullArgument, "out is null") };
        let m = h.env.metrics();
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *o = PnMetrics {
            e_nav: v(m.e_nav),
            i_nav: v(m.i_nav),
            s_manip: v(m.s_manip),
            e_manip: v(m.e_manip),
            i_manip: v(m.i_manip),
        };
        PnStatus::Ok
    })
}
