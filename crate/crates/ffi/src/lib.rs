//! C interface to `sbneuro`.
//!
//! Objects are opaque handles created by `*_new`/`*_from_json` calls and
//! released with the matching `*_free`. Every fallible call returns an
//! [`SbStatus`]; on failure `sb_last_error()` describes the problem for the
//! calling thread. Results are written through out-pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sbneuro::cli::CliError;
use sbneuro::extract::{calibrate_vccs, VccsModel};
use sbneuro::neuron::{fit_parasitic, ideal_frequency, measure_frequency, MeasureOptions, NeuronConfig};
use sbneuro::sbmodel::{drain_current, effective_barrier, transfer_curve, BiasPoint, DeviceParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Bad argument, configuration or JSON document.
    InvalidInput = 2,
    /// Solver or integrator failure.
    Numerical = 3,
    /// A Rust panic was caught at the boundary.
    Internal = 4,
}

/// Device parameter set.
pub struct SbDeviceParams(DeviceParams);

/// Calibrated gate-voltage to current map.
pub struct SbVccsModel(VccsModel);

/// Capacitor neuron configuration.
pub struct SbNeuronConfig(NeuronConfig);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SbStatus, String);

impl<E: Into<CliError>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e: CliError = e.into();
        let status = match e {
            CliError::Input(_) => SbStatus::InvalidInput,
            CliError::Numerical(_) => SbStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SbStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SbStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; empty if nothing failed yet.
#[no_mangle]
pub extern "C" fn sb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default device parameters.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sb_device_params_default(out: *mut *mut SbDeviceParams) -> SbStatus {
    guard(|| put(out, Box::into_raw(Box::new(SbDeviceParams(DeviceParams::default())))))
}

/// Parses a device parameter JSON document.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sb_device_params_from_json(
    json: *const c_char,
    out: *mut *mut SbDeviceParams,
) -> SbStatus {
    guard(|| {
        let p = DeviceParams::from_json(str_arg(json, "json")?)?;
        put(out, Box::into_raw(Box::new(SbDeviceParams(p))))
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_device_params_free(p: *mut SbDeviceParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Drain current in amperes at one bias point.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_drain_current(
    p: *const SbDeviceParams,
    v_tg: f64,
    v_bg: f64,
    v_ds: f64,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let p = obj(p, "params")?;
        let i = drain_current(&p.0, &BiasPoint::new(v_tg, v_bg, v_ds))?;
        put(out, i)
    })
}

/// Effective source barrier height in volts.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_effective_barrier(
    p: *const SbDeviceParams,
    v_tg: f64,
    v_bg: f64,
    v_ds: f64,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let p = obj(p, "params")?;
        put(out, effective_barrier(&p.0, &BiasPoint::new(v_tg, v_bg, v_ds)))
    })
}

/// Drain currents for `n` top-gate voltages into `i_out[0..n]`.
///
/// # Safety
/// `v_tg` must be readable and `i_out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_transfer_curve(
    p: *const SbDeviceParams,
    v_tg: *const f64,
    n: usize,
    v_bg: f64,
    v_ds: f64,
    i_out: *mut f64,
) -> SbStatus {
    guard(|| {
        let p = obj(p, "params")?;
        if n == 0 {
            return Ok(());
        }
        if v_tg.is_null() {
            return Err(null("v_tg"));
        }
        if i_out.is_null() {
            return Err(null("i_out"));
        }
        let sweep = std::slice::from_raw_parts(v_tg, n);
        let curve = transfer_curve(&p.0, sweep, v_bg, v_ds)?;
        let out = std::slice::from_raw_parts_mut(i_out, n);
        for (o, r) in out.iter_mut().zip(curve.records()) {
            *o = r.i_d;
        }
        Ok(())
    })
}

/// Fits a VCCS map to a simulated transfer curve of `p` sampled at
/// `n_samples` points on `[v_lo, v_hi]`.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_vccs_calibrate(
    p: *const SbDeviceParams,
    v_lo: f64,
    v_hi: f64,
    n_samples: usize,
    v_bg: f64,
    v_ds: f64,
    n_knots: usize,
    out: *mut *mut SbVccsModel,
) -> SbStatus {
    guard(|| {
        let p = obj(p, "params")?;
        let m = calibrate_vccs(&p.0, (v_lo, v_hi), n_samples, v_bg, v_ds, n_knots)?;
        put(out, Box::into_raw(Box::new(SbVccsModel(m))))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_vccs_from_json(
    json: *const c_char,
    out: *mut *mut SbVccsModel,
) -> SbStatus {
    guard(|| {
        let m = VccsModel::from_json(str_arg(json, "json")?)?;
        put(out, Box::into_raw(Box::new(SbVccsModel(m))))
    })
}

/// Current of the map at `v_tg`, amperes.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_vccs_eval(m: *const SbVccsModel, v_tg: f64, out: *mut f64) -> SbStatus {
    guard(|| {
        let m = obj(m, "model")?;
        put(out, m.0.eval(v_tg))
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_vccs_free(m: *mut SbVccsModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Parses a neuron configuration. `base_dir` (may be null) resolves a
/// relative `params_path`; null means the working directory.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_neuron_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut SbNeuronConfig,
) -> SbStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let base = if base_dir.is_null() { "." } else { str_arg(base_dir, "base_dir")? };
        let cfg = NeuronConfig::from_json(text, Path::new(base))?;
        put(out, Box::into_raw(Box::new(SbNeuronConfig(cfg))))
    })
}

/// # Safety
/// `c` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_neuron_free(c: *mut SbNeuronConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Steady-state firing frequency at `v_tg`. `dt <= 0` picks the step
/// automatically. `timed_out` may be null.
///
/// # Safety
/// `c` must be a live handle; `f_hz` writable; `timed_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sb_neuron_measure_frequency(
    c: *const SbNeuronConfig,
    v_tg: f64,
    dt: f64,
    f_hz: *mut f64,
    timed_out: *mut bool,
) -> SbStatus {
    guard(|| {
        let c = obj(c, "config")?;
        let opts = MeasureOptions {
            dt: (dt > 0.0).then_some(dt),
            ..MeasureOptions::default()
        };
        let m = measure_frequency(&c.0, v_tg, &opts)?;
        put(f_hz, m.f_hz)?;
        if !timed_out.is_null() {
            timed_out.write(m.timed_out);
        }
        Ok(())
    })
}

/// Closed-form frequency of the neuron driven by a constant current.
///
/// # Safety
/// `c` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_ideal_frequency(
    c: *const SbNeuronConfig,
    i_const: f64,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let c = obj(c, "config")?;
        put(out, ideal_frequency(i_const, &c.0)?)
    })
}

/// Parasitic capacitance implied by the measured small/large capacitor
/// frequency ratio, farads.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_fit_parasitic(
    f_ratio: f64,
    c_small: f64,
    c_large: f64,
    out: *mut f64,
) -> SbStatus {
    guard(|| put(out, fit_parasitic(f_ratio, c_small, c_large)?))
}
