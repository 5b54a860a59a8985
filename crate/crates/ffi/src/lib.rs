//! C interface to `corrmmse`.
//!
//! Objects are opaque handles created by `cm_*_new`/`cm_*_load` functions and
//! released with the matching `cm_*_free`. Every fallible call returns a
//! [`CmStatus`]; on failure `cm_last_error_message` describes the last error
//! raised on the calling thread. Outputs are written through pointers only on
//! success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use corrmmse::channel::{
    realize_channel, ChannelInstance, CompositeParams, FadingModel, GainMatrix, MuUnits, RainParams,
};
use corrmmse::closedform::ClosedFormCurve;
use corrmmse::detector::instance_metrics;
use corrmmse::montecarlo::{find_crossing, run_sweep_with_threads, SnrGrid, SweepResult};
use corrmmse::numerics::{exp_integral_e1, ComplexMatrix, RngStream};
use corrmmse::Error;

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DomainError = 3,
    RankDeficient = 4,
    NotSquare = 5,
    ParseError = 6,
    IoError = 7,
    SingularChannel = 8,
    DegenerateInstance = 9,
    ExcessiveSkips = 10,
    NotPositiveDefinite = 11,
    BufferTooSmall = 12,
    OutOfRange = 13,
    Panic = 99,
}

impl From<&Error> for CmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotPositiveDefinite { .. } => CmStatus::NotPositiveDefinite,
            Error::Domain(_) => CmStatus::DomainError,
            Error::InvalidParameter(_) => CmStatus::InvalidParameter,
            Error::RankDeficient { .. } => CmStatus::RankDeficient,
            Error::NotSquare { .. } => CmStatus::NotSquare,
            Error::Parse { .. } => CmStatus::ParseError,
            Error::SingularChannel => CmStatus::SingularChannel,
            Error::DegenerateInstance { .. } => CmStatus::DegenerateInstance,
            Error::ExcessiveSkips { .. } => CmStatus::ExcessiveSkips,
            Error::Io { .. } => CmStatus::IoError,
        }
    }
}

/// Opaque gain matrix `B`.
pub struct CmGainMatrix(GainMatrix);
/// Opaque fading model.
pub struct CmFading(FadingModel);
/// Opaque channel realization `H`.
pub struct CmChannel(ChannelInstance);
/// Opaque sweep result.
pub struct CmSweep(SweepResult);

/// Per-instance metrics at one SNR.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CmMetrics {
    pub gamma: f64,
    pub mmse_exact: f64,
    pub mmse_approx: f64,
    pub mutual_info: f64,
    pub mutual_info_lb: f64,
    pub spectral_eff: f64,
    pub jensen_lb: f64,
}

/// One row of a sweep.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CmSweepPoint {
    pub gamma_db: f64,
    pub mmse_exact_mean: f64,
    pub mmse_exact_se: f64,
    pub mmse_approx_mean: f64,
    pub mmse_approx_se: f64,
    pub closed_form: f64,
    pub deviation_db: f64,
    pub shift_db: f64,
    pub spectral_eff_mean: f64,
    pub jensen_lb_mean: f64,
    pub mutual_info_mean: f64,
    pub mutual_info_lb_mean: f64,
}

/// Crossing search result. `found` is 0 when no sign change was seen.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CmCrossing {
    pub found: i32,
    pub gamma_star: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub relative_width: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CmStatus, msg: impl Into<String>) -> CmStatus {
    set_error(msg.into());
    status
}

fn fail_with(e: &Error) -> CmStatus {
    fail(CmStatus::from(e), format!("{}: {e}", e.kind()))
}

fn guard(f: impl FnOnce() -> CmStatus) -> CmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CmStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(CmStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

macro_rules! out {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(CmStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail_with(&e),
        }
    };
}

/// Message for the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn cm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn cm_status_name(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        x if x == CmStatus::Ok as i32 => c"Ok",
        x if x == CmStatus::NullPointer as i32 => c"NullPointer",
        x if x == CmStatus::InvalidParameter as i32 => c"InvalidParameter",
        x if x == CmStatus::DomainError as i32 => c"DomainError",
        x if x == CmStatus::RankDeficient as i32 => c"RankDeficient",
        x if x == CmStatus::NotSquare as i32 => c"NotSquare",
        x if x == CmStatus::ParseError as i32 => c"ParseError",
        x if x == CmStatus::IoError as i32 => c"IoError",
        x if x == CmStatus::SingularChannel as i32 => c"SingularChannel",
        x if x == CmStatus::DegenerateInstance as i32 => c"DegenerateInstance",
        x if x == CmStatus::ExcessiveSkips as i32 => c"ExcessiveSkips",
        x if x == CmStatus::NotPositiveDefinite as i32 => c"NotPositiveDefinite",
        x if x == CmStatus::BufferTooSmall as i32 => c"BufferTooSmall",
        x if x == CmStatus::OutOfRange as i32 => c"OutOfRange",
        x if x == CmStatus::Panic as i32 => c"Panic",
        _ => c"Unknown",
    };
    s.as_ptr()
}

fn boxed<T>(v: T, out: *mut *mut T) -> CmStatus {
    match unsafe { out.as_mut() } {
        Some(o) => {
            *o = Box::into_raw(Box::new(v));
            CmStatus::Ok
        }
        None => fail(CmStatus::NullPointer, "output handle pointer is null"),
    }
}

// ---- gain matrix ----

/// Synthetic `B_ij = overlap^|i-j|`, normalized to `tr(B^H B) = k`.
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_gain_synthetic(
    k: usize,
    overlap: f64,
    out: *mut *mut CmGainMatrix,
) -> CmStatus {
    guard(|| {
        boxed(
            CmGainMatrix(tri!(GainMatrix::synthetic(k, overlap, None))),
            out,
        )
    })
}

/// Real `k×k` gain matrix from row-major `data`.
///
/// # Safety
/// `data` must point to `k*k` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_gain_from_real(
    data: *const f64,
    k: usize,
    out: *mut *mut CmGainMatrix,
) -> CmStatus {
    guard(|| {
        if data.is_null() {
            return fail(CmStatus::NullPointer, "data is null");
        }
        let Some(len) = k.checked_mul(k) else {
            return fail(CmStatus::InvalidParameter, "k*k overflows");
        };
        let slice = unsafe { std::slice::from_raw_parts(data, len) };
        let m = tri!(ComplexMatrix::from_real(k, k, slice));
        boxed(CmGainMatrix(tri!(GainMatrix::new(m))), out)
    })
}

/// Loads a beam-pattern CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cm_gain_load(
    path: *const c_char,
    out: *mut *mut CmGainMatrix,
) -> CmStatus {
    guard(|| {
        if path.is_null() {
            return fail(CmStatus::NullPointer, "path is null");
        }
        let Ok(p) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(CmStatus::InvalidParameter, "path is not UTF-8");
        };
        boxed(CmGainMatrix(tri!(GainMatrix::load(p))), out)
    })
}

/// # Safety
/// `b` must be null or a handle from a `cm_gain_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn cm_gain_free(b: *mut CmGainMatrix) {
    if !b.is_null() {
        drop(unsafe { Box::from_raw(b) });
    }
}

/// # Safety
/// `b` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_gain_dim(b: *const CmGainMatrix, out: *mut usize) -> CmStatus {
    guard(|| {
        let b = deref!(b);
        *out!(out) = b.0.dim();
        CmStatus::Ok
    })
}

/// `(1/K) ln det(B^H B)`.
///
/// # Safety
/// `b` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_gain_logdet_per_user(
    b: *const CmGainMatrix,
    out: *mut f64,
) -> CmStatus {
    guard(|| {
        let b = deref!(b);
        *out!(out) = b.0.logdet_per_user();
        CmStatus::Ok
    })
}

// ---- fading ----

/// Rician-lognormal composite fading. `mu_in_db` selects decibel units for
/// the shadowing parameters.
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_fading_composite(
    rician_factor_db: f64,
    shadow_mean: f64,
    shadow_sigma: f64,
    mu_in_db: bool,
    out: *mut *mut CmFading,
) -> CmStatus {
    guard(|| {
        let model = FadingModel::Composite(CompositeParams {
            rician_factor_db,
            shadow_mean,
            shadow_sigma,
            mu_units: if mu_in_db {
                MuUnits::Decibel
            } else {
                MuUnits::Natural
            },
        });
        tri!(model.validate());
        boxed(CmFading(model), out)
    })
}

/// Log-log-normal rain fading.
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_fading_rain(
    mu: f64,
    sigma: f64,
    db_conversion: bool,
    out: *mut *mut CmFading,
) -> CmStatus {
    guard(|| {
        let model = FadingModel::Rain(RainParams {
            lognormal_mu: mu,
            lognormal_sigma: sigma,
            db_conversion,
        });
        tri!(model.validate());
        boxed(CmFading(model), out)
    })
}

/// All fading coefficients equal to 1.
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_fading_unit(out: *mut *mut CmFading) -> CmStatus {
    guard(|| boxed(CmFading(FadingModel::Unit), out))
}

/// # Safety
/// `f` must be null or a handle from a `cm_fading_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn cm_fading_free(f: *mut CmFading) {
    if !f.is_null() {
        drop(unsafe { Box::from_raw(f) });
    }
}

// ---- channel ----

/// Draws `H = B·D^½` from stream `stream` of `seed`. Same inputs give the
/// same channel as trial `stream` of a sweep with that seed.
///
/// # Safety
/// `b` and `f` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn cm_channel_realize(
    b: *const CmGainMatrix,
    f: *const CmFading,
    seed: u64,
    stream: u64,
    out: *mut *mut CmChannel,
) -> CmStatus {
    guard(|| {
        let (b, f) = (deref!(b), deref!(f));
        boxed(
            CmChannel(realize_channel(
                &b.0,
                &f.0,
                &mut RngStream::new(seed, stream),
            )),
            out,
        )
    })
}

/// # Safety
/// `h` must be null or a handle from `cm_channel_realize`, freed once.
#[no_mangle]
pub unsafe extern "C" fn cm_channel_free(h: *mut CmChannel) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// All scalar metrics at linear SNR `gamma`.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_channel_metrics(
    h: *const CmChannel,
    gamma: f64,
    out: *mut CmMetrics,
) -> CmStatus {
    guard(|| {
        let h = deref!(h);
        let out = out!(out);
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return fail(
                CmStatus::InvalidParameter,
                format!("gamma must be finite and >= 0, got {gamma}"),
            );
        }
        let m = tri!(instance_metrics(&h.0, gamma));
        *out = CmMetrics {
            gamma: m.gamma,
            mmse_exact: m.mmse_exact,
            mmse_approx: m.mmse_approx,
            mutual_info: m.mutual_info,
            mutual_info_lb: m.mutual_info_lb,
            spectral_eff: m.spectral_eff,
            jensen_lb: m.jensen_lb,
        };
        CmStatus::Ok
    })
}

/// Per-user MMSE SINR into `buf[0..len)`; `len` must be at least K.
///
/// # Safety
/// `h` must be a live handle and `buf` must have `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_channel_sinr(
    h: *const CmChannel,
    gamma: f64,
    buf: *mut f64,
    len: usize,
) -> CmStatus {
    guard(|| {
        let h = deref!(h);
        if buf.is_null() {
            return fail(CmStatus::NullPointer, "buf is null");
        }
        if len < h.0.dim() {
            return fail(
                CmStatus::BufferTooSmall,
                format!("need {} entries, got {len}", h.0.dim()),
            );
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return fail(
                CmStatus::InvalidParameter,
                format!("gamma must be finite and >= 0, got {gamma}"),
            );
        }
        let m = tri!(instance_metrics(&h.0, gamma));
        let dst = unsafe { std::slice::from_raw_parts_mut(buf, m.sinr_per_user.len()) };
        dst.copy_from_slice(&m.sinr_per_user);
        CmStatus::Ok
    })
}

/// SNR where the approximate and exact MMSE cross, searched up to `gamma_max`.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_channel_crossing(
    h: *const CmChannel,
    gamma_max: f64,
    tol: f64,
    out: *mut CmCrossing,
) -> CmStatus {
    guard(|| {
        let h = deref!(h);
        let out = out!(out);
        let r = tri!(find_crossing(&h.0, 0, gamma_max, tol));
        *out = match (r.gamma_star, r.bracket) {
            (Some(g), Some((lo, hi))) => CmCrossing {
                found: 1,
                gamma_star: g,
                gamma_lo: lo,
                gamma_hi: hi,
                relative_width: r.relative_width,
            },
            _ => CmCrossing {
                found: 0,
                gamma_star: f64::NAN,
                gamma_lo: f64::NAN,
                gamma_hi: f64::NAN,
                relative_width: f64::NAN,
            },
        };
        CmStatus::Ok
    })
}

// ---- closed form ----

/// Closed-form expected MMSE approximation at linear SNR `gamma`.
///
/// # Safety
/// `b` and `f` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn cm_closed_form(
    b: *const CmGainMatrix,
    f: *const CmFading,
    gamma: f64,
    out: *mut f64,
) -> CmStatus {
    guard(|| {
        let (b, f) = (deref!(b), deref!(f));
        let out = out!(out);
        if !(gamma >= 0.0) {
            return fail(
                CmStatus::InvalidParameter,
                format!("gamma must be >= 0, got {gamma}"),
            );
        }
        *out = tri!(ClosedFormCurve::new(&b.0, &f.0)).evaluate(gamma);
        CmStatus::Ok
    })
}

/// Exponential integral `E₁(x)` for `x > 0`.
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_exp_integral_e1(x: f64, out: *mut f64) -> CmStatus {
    guard(|| {
        let out = out!(out);
        *out = tri!(exp_integral_e1(x));
        CmStatus::Ok
    })
}

// ---- sweep ----

/// Monte Carlo sweep over `points` SNRs from `start_db` to `stop_db`.
/// `threads = 0` uses the global pool; results do not depend on it.
///
/// # Safety
/// `b` and `f` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn cm_sweep_run(
    b: *const CmGainMatrix,
    f: *const CmFading,
    start_db: f64,
    stop_db: f64,
    points: usize,
    trials: usize,
    seed: u64,
    threads: usize,
    out: *mut *mut CmSweep,
) -> CmStatus {
    guard(|| {
        let (b, f) = (deref!(b), deref!(f));
        let grid = tri!(SnrGrid::from_db(start_db, stop_db, points));
        let threads = (threads > 0).then_some(threads);
        boxed(
            CmSweep(tri!(run_sweep_with_threads(
                &b.0, &f.0, &grid, trials, seed, threads
            ))),
            out,
        )
    })
}

/// # Safety
/// `s` must be null or a handle from `cm_sweep_run`, freed once.
#[no_mangle]
pub unsafe extern "C" fn cm_sweep_free(s: *mut CmSweep) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Number of grid points.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_sweep_len(s: *const CmSweep, out: *mut usize) -> CmStatus {
    guard(|| {
        let s = deref!(s);
        *out!(out) = s.0.grid.len();
        CmStatus::Ok
    })
}

/// Trials used and skipped.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_sweep_trials(
    s: *const CmSweep,
    used: *mut usize,
    skipped: *mut usize,
) -> CmStatus {
    guard(|| {
        let s = deref!(s);
        *out!(used) = s.0.n_trials;
        *out!(skipped) = s.0.skipped;
        CmStatus::Ok
    })
}

/// Row `index` of the sweep.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_sweep_point(
    s: *const CmSweep,
    index: usize,
    out: *mut CmSweepPoint,
) -> CmStatus {
    guard(|| {
        let r = &deref!(s).0;
        let out = out!(out);
        if index >= r.grid.len() {
            return fail(
                CmStatus::OutOfRange,
                format!("index {index} out of range (len {})", r.grid.len()),
            );
        }
        let i = index;
        *out = CmSweepPoint {
            gamma_db: r.grid.db()[i],
            mmse_exact_mean: r.mmse_exact.mean[i],
            mmse_exact_se: r.mmse_exact.std_error[i],
            mmse_approx_mean: r.mmse_approx.mean[i],
            mmse_approx_se: r.mmse_approx.std_error[i],
            closed_form: r.closed_form[i],
            deviation_db: r.deviation_db[i],
            shift_db: r.shift_db[i],
            spectral_eff_mean: r.spectral_eff.mean[i],
            jensen_lb_mean: r.jensen_lb.mean[i],
            mutual_info_mean: r.mutual_info.mean[i],
            mutual_info_lb_mean: r.mutual_info_lb.mean[i],
        };
        CmStatus::Ok
    })
}
