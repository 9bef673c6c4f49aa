//! C ABI over `event_warp`.
//!
//! Every fallible call returns an [`EwStatus`]; on failure the message is
//! available from [`ew_last_error`] on the same thread until the next failing
//! call. Handles are opaque and must be released with their `_free`
//! function. Passing a null handle is reported as `EW_NULL_POINTER`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use event_warp::analytic::{variance_1d, variance_2d};
use event_warp::events::{parse_binary, parse_events};
use event_warp::optimizer::{evaluate_roc, landscape, maximize_contrast, RocOptions};
use event_warp::{
    Bounds, CorrectionOptions, Error, EventStream, Format, Kernel, NelderMeadOptions, Pipeline,
    SensorGeometry, Velocity,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EwStatus {
    EwOk = 0,
    EwNullPointer = 1,
    EwInvalidArgument = 2,
    EwParse = 3,
    EwValidation = 4,
    EwDomain = 5,
    EwContract = 6,
    EwNonFinite = 7,
    EwIo = 8,
    EwPanic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EwKernel {
    EwNearest = 0,
    EwBilinear = 1,
}

/// A parsed, time-sorted event stream.
pub struct EwStream(EventStream);

/// Objective configuration: raw or corrected, kernel and masking.
pub struct EwPipeline(Pipeline);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EwEstimate {
    pub vx: f64,
    pub vy: f64,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EwRoc {
    pub roc_percent: f64,
    pub rms: f64,
    pub runs: usize,
    pub successes: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EwStatus {
    match err {
        Error::Parse { .. } => EwStatus::EwParse,
        Error::Validation { .. } => EwStatus::EwValidation,
        Error::Domain(_) => EwStatus::EwDomain,
        Error::Contract(_) => EwStatus::EwContract,
        Error::NonFinite { .. } => EwStatus::EwNonFinite,
        Error::Io(_) => EwStatus::EwIo,
    }
}

fn fail(status: EwStatus, msg: impl Into<String>) -> EwStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning library errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), EwStatus>>(f: F) -> EwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EwStatus::EwOk,
        Ok(Err(status)) => status,
        Err(_) => fail(EwStatus::EwPanic, "internal panic"),
    }
}

fn lib<T>(r: event_warp::Result<T>) -> Result<T, EwStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, EwStatus> {
    // SAFETY: the caller promises `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| fail(EwStatus::EwNullPointer, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<*mut T, EwStatus> {
    if p.is_null() {
        Err(fail(EwStatus::EwNullPointer, format!("{what} is null")))
    } else {
        Ok(p)
    }
}

fn finite(v: f64, what: &str) -> Result<f64, EwStatus> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(fail(EwStatus::EwInvalidArgument, format!("{what} must be finite")))
    }
}

fn geometry(width: u16, height: u16) -> Result<SensorGeometry, EwStatus> {
    lib(SensorGeometry::new(width, height))
}

fn parse(bytes: &[u8], width: u16, height: u16) -> Result<EventStream, EwStatus> {
    match Format::detect(bytes) {
        Format::Binary => lib(parse_binary(bytes)),
        Format::Text => lib(parse_events(bytes, Format::Text, geometry(width, height)?)),
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ew_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an in-memory stream. Binary input carries its own geometry;
/// `width` and `height` apply to text input.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_stream_from_bytes(
    data: *const u8,
    len: usize,
    width: u16,
    height: u16,
    out: *mut *mut EwStream,
) -> EwStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let bytes = if len == 0 {
            &[][..]
        } else {
            if data.is_null() {
                return Err(fail(EwStatus::EwNullPointer, "data is null"));
            }
            // SAFETY: caller guarantees `len` readable bytes at `data`.
            unsafe { std::slice::from_raw_parts(data, len) }
        };
        let stream = parse(bytes, width, height)?;
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = Box::into_raw(Box::new(EwStream(stream))) };
        Ok(())
    })
}

/// Reads and parses a file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_stream_from_file(
    path: *const c_char,
    width: u16,
    height: u16,
    out: *mut *mut EwStream,
) -> EwStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if path.is_null() {
            return Err(fail(EwStatus::EwNullPointer, "path is null"));
        }
        // SAFETY: caller guarantees a nul-terminated string.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| fail(EwStatus::EwInvalidArgument, "path is not UTF-8"))?;
        let bytes = std::fs::read(path).map_err(|e| fail(EwStatus::EwIo, format!("{path}: {e}")))?;
        let stream = parse(&bytes, width, height)?;
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = Box::into_raw(Box::new(EwStream(stream))) };
        Ok(())
    })
}

/// Number of events, or 0 for a null handle.
///
/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ew_stream_len(stream: *const EwStream) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { stream.as_ref() }.map_or(0, |s| s.0.len())
}

/// # Safety
/// `stream` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_stream_geometry(
    stream: *const EwStream,
    width: *mut u16,
    height: *mut u16,
) -> EwStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let s = unsafe { deref(stream, "stream") }?;
        let (w, h) = (out_ptr(width, "width")?, out_ptr(height, "height")?);
        let g = s.0.geometry();
        // SAFETY: both checked non-null.
        unsafe {
            *w = g.width;
            *h = g.height;
        }
        Ok(())
    })
}

/// # Safety
/// `stream` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ew_stream_free(stream: *mut EwStream) {
    if !stream.is_null() {
        // SAFETY: the handle came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(stream) });
    }
}

/// `eta` is the minimum exposure kept in the statistics (0.02 is the
/// default); `clamp` caps correction factors, and values `<= 0` disable it.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_pipeline_new(
    corrected: bool,
    kernel: EwKernel,
    eta: f64,
    clamp: f64,
    out: *mut *mut EwPipeline,
) -> EwStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if !(0.0..1.0).contains(&eta) {
            return Err(fail(EwStatus::EwInvalidArgument, format!("eta must lie in [0, 1), got {eta}")));
        }
        let clamp = if clamp > 0.0 {
            if !(clamp >= 1.0 && clamp.is_finite()) {
                return Err(fail(EwStatus::EwInvalidArgument, format!("clamp must be at least 1, got {clamp}")));
            }
            Some(clamp)
        } else {
            None
        };
        let p = Pipeline {
            corrected,
            kernel: match kernel {
                EwKernel::EwNearest => Kernel::Nearest,
                EwKernel::EwBilinear => Kernel::Bilinear,
            },
            correction: CorrectionOptions { eta, clamp },
        };
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = Box::into_raw(Box::new(EwPipeline(p))) };
        Ok(())
    })
}

/// # Safety
/// `pipeline` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ew_pipeline_free(pipeline: *mut EwPipeline) {
    if !pipeline.is_null() {
        // SAFETY: the handle came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(pipeline) });
    }
}

/// Contrast of `stream` at velocity `(vx, vy)` px/s.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_contrast(
    stream: *const EwStream,
    pipeline: *const EwPipeline,
    vx: f64,
    vy: f64,
    out: *mut f64,
) -> EwStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, p) = unsafe { (deref(stream, "stream")?, deref(pipeline, "pipeline")?) };
        let out = out_ptr(out, "out")?;
        let theta = Velocity::new(finite(vx, "vx")?, finite(vy, "vy")?);
        let v = lib(p.0.evaluator(&s.0).contrast(theta))?;
        // SAFETY: checked non-null.
        unsafe { *out = v.value };
        Ok(())
    })
}

/// Nelder-Mead from `(vx0, vy0)` with an initial simplex edge of
/// `initial_scale` px/s.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ew_estimate(
    stream: *const EwStream,
    pipeline: *const EwPipeline,
    vx0: f64,
    vy0: f64,
    initial_scale: f64,
    out: *mut EwEstimate,
) -> EwStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, p) = unsafe { (deref(stream, "stream")?, deref(pipeline, "pipeline")?) };
        let out = out_ptr(out, "out")?;
        let theta0 = Velocity::new(finite(vx0, "vx0")?, finite(vy0, "vy0")?);
        if !(initial_scale > 0.0 && initial_scale.is_finite()) {
            return Err(fail(EwStatus::EwInvalidArgument, "initial_scale must be positive"));
        }
        let options = NelderMeadOptions {
            initial_scale,
            ..NelderMeadOptions::default()
        };
        let r = lib(maximize_contrast(&s.0, p.0, theta0, &options))?;
        // SAFETY: checked non-null.
        unsafe {
            *out = EwEstimate {
                vx: r.theta_hat.vx,
                vy: r.theta_hat.vy,
                objective: r.objective_value,
                iterations: r.iterations,
                evaluations: r.evaluations,
                converged: r.converged,
            }
        };
        Ok(())
    })
}

/// Objective over the lattice `[vx_min, vx_max] x [vy_min, vy_max]` with
/// spacing `resolution`, row-major with `vx` varying fastest. Call with
/// `values` null to query `nx` and `ny`; otherwise `capacity` must be at
/// least `nx * ny`.
///
/// # Safety
/// Handles must be live; `nx` and `ny` writable; `values` null or writable
/// for `capacity` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ew_landscape(
    stream: *const EwStream,
    pipeline: *const EwPipeline,
    vx_min: f64,
    vx_max: f64,
    vy_min: f64,
    vy_max: f64,
    resolution: f64,
    values: *mut f64,
    capacity: usize,
    nx: *mut usize,
    ny: *mut usize,
) -> EwStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, p) = unsafe { (deref(stream, "stream")?, deref(pipeline, "pipeline")?) };
        let (nx, ny) = (out_ptr(nx, "nx")?, out_ptr(ny, "ny")?);
        let bounds = lib(Bounds::new(vx_min, vx_max, vy_min, vy_max))?;
        let lattice = lib(bounds.lattice(resolution))?;
        // SAFETY: checked non-null.
        unsafe {
            *nx = lattice.nx;
            *ny = lattice.ny;
        }
        if values.is_null() {
            return Ok(());
        }
        if capacity < lattice.len() {
            return Err(fail(
                EwStatus::EwInvalidArgument,
                format!("capacity {capacity} below {} lattice points", lattice.len()),
            ));
        }
        let l = lib(landscape(&s.0, bounds, resolution, p.0))?;
        // SAFETY: caller guarantees `capacity` writable doubles.
        unsafe { ptr::copy_nonoverlapping(l.values.as_ptr(), values, l.values.len()) };
        Ok(())
    })
}

/// Multi-start rate of convergence over the square `[-half, half]^2`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ew_roc(
    stream: *const EwStream,
    pipeline: *const EwPipeline,
    gt_vx: f64,
    gt_vy: f64,
    half: f64,
    step: f64,
    tolerance: f64,
    out: *mut EwRoc,
) -> EwStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, p) = unsafe { (deref(stream, "stream")?, deref(pipeline, "pipeline")?) };
        let out = out_ptr(out, "out")?;
        let gt = Velocity::new(finite(gt_vx, "gt_vx")?, finite(gt_vy, "gt_vy")?);
        if !(half > 0.0 && half.is_finite()) || tolerance.is_nan() || tolerance <= 0.0 {
            return Err(fail(EwStatus::EwInvalidArgument, "half and tolerance must be positive"));
        }
        let options = RocOptions {
            bounds: Bounds::symmetric(half),
            grid_step: step,
            tolerance,
            ..RocOptions::default()
        };
        let r = lib(evaluate_roc(&s.0, gt, &options, p.0))?;
        // SAFETY: checked non-null.
        unsafe {
            *out = EwRoc {
                roc_percent: r.roc_percent,
                rms: r.rms,
                runs: r.runs,
                successes: r.successes,
            }
        };
        Ok(())
    })
}

/// Closed-form variance of the sheared 1D noise profile of height `c`.
#[no_mangle]
pub extern "C" fn ew_variance_1d(s: f64, c: f64) -> f64 {
    variance_1d(s, c)
}

/// Closed-form variance of the sheared 2D noise profile of height `c`.
#[no_mangle]
pub extern "C" fn ew_variance_2d(sx: f64, sy: f64, c: f64) -> f64 {
    variance_2d(sx, sy, c)
}
