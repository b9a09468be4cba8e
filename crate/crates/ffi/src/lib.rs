//! C ABI over the haznav library.
//!
//! Every function returns a [`HaznavStatus`]. On failure the message is kept
//! per thread and can be read with [`haznav_last_error`]. Handles are opaque
//! and must be released with their `_free` function; strings returned through
//! `char **` out-parameters must be released with [`haznav_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use haznav::cli::cmd_eval;
use haznav::config::ExperimentConfig;
use haznav::controller::{load_weights, ControllerNet};
use haznav::image::CHANNELS;
use haznav::threat::{fuse_images, pixel_threat_at, threat_radar, ThreatConfig};
use haznav::{ImageTensor, PixelRange};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaznavStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Runtime = 5,
    Panic = 6,
}

/// Experiment configuration.
pub struct HaznavConfig {
    inner: ExperimentConfig,
}

/// Trained steering controller.
pub struct HaznavController {
    net: ControllerNet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HaznavStatus, String);

impl Failure {
    fn null(name: &str) -> Self {
        Failure(HaznavStatus::NullPointer, format!("{name} is null"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Failure(HaznavStatus::InvalidArgument, msg.into())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HaznavStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HaznavStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
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
            HaznavStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(name))
}

fn string_out(s: String, out: &mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(HaznavStatus::Runtime, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn haznav_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn haznav_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Radar-procedure threat for a hazard `l_x_cm` ahead and `l_y_cm` to the
/// side, with the default gates.
///
/// # Safety
/// `out` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn haznav_threat_radar(l_x_cm: f64, l_y_cm: f64, out: *mut f64) -> HaznavStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = threat_radar(l_x_cm, l_y_cm, &ThreatConfig::default()).map_err(|e| Failure::invalid(e.to_string()))?;
        *out = t.t_f;
        Ok(())
    })
}

/// Pixel-procedure threat at `(row, col)` of an `height x width` frame.
///
/// # Safety
/// `out` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn haznav_threat_pixel(
    row: f64,
    col: f64,
    height: usize,
    width: usize,
    out: *mut f64,
) -> HaznavStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if height == 0 || width == 0 {
            return Err(Failure::invalid("frame dimensions must be positive"));
        }
        *out = pixel_threat_at(row, col, height, width);
        Ok(())
    })
}

/// Blends `original` toward `segmented` by `t_f`. All three buffers hold
/// `height * width * 3` raw values in `[0, 255]`, row-major and
/// channel-interleaved.
///
/// # Safety
/// Each pointer must reference `height * width * 3` floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn haznav_fuse(
    original: *const f32,
    segmented: *const f32,
    height: usize,
    width: usize,
    t_f: f64,
    out: *mut f32,
) -> HaznavStatus {
    guard(|| {
        if original.is_null() || segmented.is_null() || out.is_null() {
            return Err(Failure::null("image buffer"));
        }
        let n = height
            .checked_mul(width)
            .and_then(|v| v.checked_mul(CHANNELS))
            .ok_or_else(|| Failure::invalid("frame dimensions overflow"))?;
        let image = |p: *const f32| {
            ImageTensor::new(height, width, PixelRange::Raw, std::slice::from_raw_parts(p, n).to_vec())
                .map_err(|e| Failure::invalid(e.to_string()))
        };
        let fused = fuse_images(&image(original)?, &image(segmented)?, t_f).map_err(|e| Failure::invalid(e.to_string()))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(fused.data());
        Ok(())
    })
}

/// # Safety
/// `out` must point to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn haznav_config_default(out: *mut *mut HaznavConfig) -> HaznavStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(HaznavConfig {
            inner: ExperimentConfig::default(),
        }));
        Ok(())
    })
}

/// Parses a JSON config; missing fields take their defaults. The result is validated.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn haznav_config_from_json(json: *const c_char, out: *mut *mut HaznavConfig) -> HaznavStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let inner: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Failure(HaznavStatus::Parse, e.to_string()))?;
        inner.validate().map_err(|e| Failure::invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(HaznavConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn haznav_config_set_seed(cfg: *mut HaznavConfig, seed: u64) -> HaznavStatus {
    guard(|| {
        out_arg(cfg, "cfg")?.inner.seed = seed;
        Ok(())
    })
}

/// Effective configuration as JSON.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn haznav_config_to_json(cfg: *const HaznavConfig, out: *mut *mut c_char) -> HaznavStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| Failure::null("cfg"))?;
        let out = out_arg(out, "out")?;
        let s = serde_json::to_string(&cfg.inner).map_err(|e| Failure(HaznavStatus::Runtime, e.to_string()))?;
        string_out(s, out)
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn haznav_config_free(cfg: *mut HaznavConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the full evaluation, writing artifacts under `out_dir`, and returns
/// the report JSON.
///
/// # Safety
/// `cfg` must be a live handle, `out_dir` a NUL-terminated path, `report` writable.
#[no_mangle]
pub unsafe extern "C" fn haznav_eval(
    cfg: *const HaznavConfig,
    out_dir: *const c_char,
    report: *mut *mut c_char,
) -> HaznavStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| Failure::null("cfg"))?;
        let dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let report = out_arg(report, "report")?;
        let r = cmd_eval(&cfg.inner, &dir).map_err(|e| Failure(HaznavStatus::Runtime, e.to_string()))?;
        let json = r.to_json().map_err(|e| Failure(HaznavStatus::Runtime, e.to_string()))?;
        string_out(String::from_utf8_lossy(&json).into_owned(), report)
    })
}

/// Loads a weights file written by `haznav train` or `haznav eval`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn haznav_controller_load(path: *const c_char, out: *mut *mut HaznavController) -> HaznavStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let net = load_weights(path, None).map_err(|e| {
            let status = match e {
                haznav::controller::WeightsError::Io(_) => HaznavStatus::Io,
                _ => HaznavStatus::Parse,
            };
            Failure(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(HaznavController { net }));
        Ok(())
    })
}

/// Input rows and columns the controller expects, after cropping.
///
/// # Safety
/// `ctl` must be a live handle; `height` and `width` writable.
#[no_mangle]
pub unsafe extern "C" fn haznav_controller_input_dims(
    ctl: *const HaznavController,
    height: *mut usize,
    width: *mut usize,
) -> HaznavStatus {
    guard(|| {
        let ctl = ctl.as_ref().ok_or_else(|| Failure::null("ctl"))?;
        let s = ctl.net.schedule();
        *out_arg(height, "height")? = s.input_height;
        *out_arg(width, "width")? = s.input_width;
        Ok(())
    })
}

/// Steering prediction for one normalized input of `len` floats in `[-1, 1]`.
/// The value is clamped to the steering range.
///
/// # Safety
/// `ctl` must be a live handle, `input` must reference `len` floats, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn haznav_controller_predict(
    ctl: *const HaznavController,
    input: *const f32,
    len: usize,
    out: *mut f64,
) -> HaznavStatus {
    guard(|| {
        let ctl = ctl.as_ref().ok_or_else(|| Failure::null("ctl"))?;
        if input.is_null() {
            return Err(Failure::null("input"));
        }
        let out = out_arg(out, "out")?;
        let x = std::slice::from_raw_parts(input, len);
        if x.iter().any(|v| !PixelRange::Normalized.contains(*v)) {
            return Err(Failure::invalid("input values must lie in [-1, 1]"));
        }
        let y = ctl.net.predict(&[x]).map_err(|e| Failure::invalid(e.to_string()))?;
        *out = haznav::SteeringAngle::new(y[0]).normalized();
        Ok(())
    })
}

/// # Safety
/// `ctl` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn haznav_controller_free(ctl: *mut HaznavController) {
    if !ctl.is_null() {
        drop(Box::from_raw(ctl));
    }
}
