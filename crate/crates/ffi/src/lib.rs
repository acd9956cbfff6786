//! C ABI for the `ris-handover` simulator.
//!
//! Objects cross the boundary as opaque handles created by `rh_*_new`/`rh_*_load`
//! and released with the matching `rh_*_free`. Every fallible call returns an
//! [`RhStatus`]; on failure the message is kept per thread and can be read with
//! [`rh_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ris_handover::ris_assign::AnnModel;
use ris_handover::simkit::{run_trial, ScenarioConfig, TrialMetrics};
use ris_handover::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Io = 4,
    Parse = 5,
    Domain = 6,
    Infeasible = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Opaque scenario configuration.
pub struct RhConfig {
    inner: ScenarioConfig,
}

/// Opaque trained assignment network.
pub struct RhAnnModel {
    inner: AnnModel,
}

/// Trial outputs. Means without any contributing handover are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RhTrialMetrics {
    /// Mean hard-handover rate (bit/s).
    pub rate_hard: f64,
    /// Mean soft-handover rate (bit/s).
    pub rate_soft: f64,
    /// Mean hard-handover latency (s).
    pub latency_hard: f64,
    /// Mean soft-handover latency (s).
    pub latency_soft: f64,
    pub handovers_hard: u64,
    pub handovers_soft: u64,
    pub bridge_events: u64,
    pub hole_fraction: f64,
    /// Mean rate over all steps (bit/s).
    pub rate_mean: f64,
    pub latency_mean: f64,
    pub steps: u64,
    pub hole_steps: u64,
}

impl From<&TrialMetrics> for RhTrialMetrics {
    fn from(m: &TrialMetrics) -> Self {
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        RhTrialMetrics {
            rate_hard: nan(m.r_h),
            rate_soft: nan(m.r_s),
            latency_hard: nan(m.delta_h),
            latency_soft: nan(m.delta_s),
            handovers_hard: m.n_h,
            handovers_soft: m.n_s,
            bridge_events: m.bridge_events,
            hole_fraction: m.hole_frac,
            rate_mean: m.mean_rate,
            latency_mean: nan(m.delta_mean),
            steps: m.steps,
            hole_steps: m.hole_steps,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

fn fail(status: RhStatus, message: impl Into<String>) -> RhStatus {
    set_last_error(message);
    status
}

fn status_of(err: &Error) -> RhStatus {
    match err {
        Error::Domain(_) => RhStatus::Domain,
        Error::Config(_) | Error::EnumerationGuard { .. } => RhStatus::Config,
        Error::InfeasibleSteering(_) => RhStatus::Infeasible,
        Error::Framing { .. } | Error::Parse { .. } => RhStatus::Parse,
        Error::NonFiniteLoss { .. } => RhStatus::Domain,
        Error::Io { .. } => RhStatus::Io,
    }
}

fn guard(body: impl FnOnce() -> Result<(), RhStatus>) -> RhStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            RhStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(RhStatus::Panic, "panic inside ris-handover"),
    }
}

fn lift<T>(r: ris_handover::Result<T>) -> Result<T, RhStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, RhStatus> {
    if p.is_null() {
        return Err(fail(RhStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(RhStatus::InvalidUtf8, e.to_string()))
}

unsafe fn ref_arg<'a, T>(p: *const T) -> Result<&'a T, RhStatus> {
    p.as_ref()
        .ok_or_else(|| fail(RhStatus::NullPointer, "null handle"))
}

unsafe fn mut_arg<'a, T>(p: *mut T) -> Result<&'a mut T, RhStatus> {
    p.as_mut()
        .ok_or_else(|| fail(RhStatus::NullPointer, "null pointer argument"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), RhStatus> {
    if out.is_null() {
        return Err(fail(RhStatus::NullPointer, "null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string and returns the full message length in bytes.
/// With a null `buf` or a `len` too small nothing is written.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rh_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len();
        if !buf.is_null() && len > n {
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        n
    })
}

/// Creates a configuration holding the defaults.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn rh_config_new(out: *mut *mut RhConfig) -> RhStatus {
    guard(|| {
        put(
            out,
            RhConfig {
                inner: ScenarioConfig::default(),
            },
        )
    })
}

/// Parses a TOML scenario.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn rh_config_from_toml(
    toml: *const c_char,
    out: *mut *mut RhConfig,
) -> RhStatus {
    guard(|| {
        let inner = lift(ScenarioConfig::from_toml_str(str_arg(toml)?))?;
        put(out, RhConfig { inner })
    })
}

/// Loads a TOML scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn rh_config_load(path: *const c_char, out: *mut *mut RhConfig) -> RhStatus {
    guard(|| {
        let inner = lift(ScenarioConfig::load(Path::new(str_arg(path)?)))?;
        put(out, RhConfig { inner })
    })
}

/// # Safety
/// `cfg` must be null or a handle from `rh_config_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rh_config_free(cfg: *mut RhConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rh_config_set_seed(cfg: *mut RhConfig, seed: u64) -> RhStatus {
    guard(|| {
        mut_arg(cfg)?.inner.seed = seed;
        Ok(())
    })
}

/// Sets the AP count. Rejected values leave the configuration unchanged.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rh_config_set_ap_count(cfg: *mut RhConfig, count: usize) -> RhStatus {
    guard(|| {
        let cfg = mut_arg(cfg)?;
        let mut next = cfg.inner.clone();
        next.aps.count = count;
        lift(next.validate())?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rh_config_set_ris_enabled(cfg: *mut RhConfig, enabled: bool) -> RhStatus {
    guard(|| {
        mut_arg(cfg)?.inner.ris.enabled = enabled;
        Ok(())
    })
}

/// Sets the simulated duration in seconds. Rejected values leave the
/// configuration unchanged.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rh_config_set_duration(cfg: *mut RhConfig, seconds: f64) -> RhStatus {
    guard(|| {
        let cfg = mut_arg(cfg)?;
        let mut next = cfg.inner.clone();
        next.sim.duration = seconds;
        lift(next.validate())?;
        cfg.inner = next;
        Ok(())
    })
}

/// Runs one trial and writes its metrics to `out`.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rh_run_trial(
    cfg: *const RhConfig,
    trial: u64,
    out: *mut RhTrialMetrics,
) -> RhStatus {
    guard(|| {
        let cfg = ref_arg(cfg)?;
        let out = mut_arg(out)?;
        let metrics = lift(run_trial(&cfg.inner, trial))?;
        *out = RhTrialMetrics::from(&metrics);
        Ok(())
    })
}

/// Loads a model written by `ris-handover train-ann`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn rh_ann_load(path: *const c_char, out: *mut *mut RhAnnModel) -> RhStatus {
    guard(|| {
        let inner = lift(AnnModel::load(Path::new(str_arg(path)?)))?;
        put(out, RhAnnModel { inner })
    })
}

/// # Safety
/// `model` must be null or a handle from `rh_ann_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rh_ann_free(model: *mut RhAnnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Reports the AP count `N` and element count `M` the model was built for.
///
/// # Safety
/// `model` must be a live handle; `n_aps` and `n_elements` writable.
#[no_mangle]
pub unsafe extern "C" fn rh_ann_dims(
    model: *const RhAnnModel,
    n_aps: *mut usize,
    n_elements: *mut usize,
) -> RhStatus {
    guard(|| {
        let model = ref_arg(model)?;
        *mut_arg(n_aps)? = model.inner.n_aps();
        *mut_arg(n_elements)? = model.inner.n_elements();
        Ok(())
    })
}

/// Predicts one AP id per element from the blockage degrees of the `N` APs
/// and the receiver position.
///
/// # Safety
/// `degrees` must point to `n_aps` doubles and `out` to `n_elements`
/// writable `size_t` slots.
#[no_mangle]
pub unsafe extern "C" fn rh_ann_predict(
    model: *const RhAnnModel,
    degrees: *const f64,
    n_aps: usize,
    x: f64,
    y: f64,
    out: *mut usize,
    n_elements: usize,
) -> RhStatus {
    guard(|| {
        let model = ref_arg(model)?;
        if degrees.is_null() || out.is_null() {
            return Err(fail(RhStatus::NullPointer, "null array argument"));
        }
        if n_elements < model.inner.n_elements() {
            return Err(fail(
                RhStatus::BufferTooSmall,
                format!(
                    "output holds {n_elements} ids, model has {} elements",
                    model.inner.n_elements()
                ),
            ));
        }
        let degrees = std::slice::from_raw_parts(degrees, n_aps);
        let ids = lift(model.inner.predict(degrees, x, y, None))?;
        std::slice::from_raw_parts_mut(out, ids.len()).copy_from_slice(&ids);
        Ok(())
    })
}
