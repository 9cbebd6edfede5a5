//! C ABI over the `outer_billiard` crate.
//!
//! Curves live behind the opaque [`ObCurve`] handle. Every fallible call
//! returns an [`ObStatus`]; on failure the message is kept per thread and can
//! be fetched with [`ob_last_error`]. Strings handed out by this library must
//! be released with [`ob_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use outer_billiard::billiard::{BilliardMap, Orientation, PhasePoint};
use outer_billiard::curve::{presets, ConvexCurve, CurveSpec};
use outer_billiard::error::Error;
use outer_billiard::generating::{angles_to_chord, chord_to_angles, s_derivatives, ChordCoords, CHART_TOL};
use outer_billiard::geometry::PlanePoint;
use outer_billiard::io::to_json;
use outer_billiard::jacobi::radial_conjugate_scan;
use outer_billiard::rigidity::{q_integral, rigidity_report, ReportSettings};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidCurve = 3,
    DynamicsFailure = 4,
    OptimizerFailure = 5,
    Panic = 6,
}

/// Opaque curve handle.
pub struct ObCurve {
    inner: ConvexCurve,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ObCurveSample {
    pub r: f64,
    pub r_prime: f64,
    pub r_second: f64,
    pub chi: f64,
    pub curvature: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ObSDerivatives {
    pub s: f64,
    pub s1: f64,
    pub s2: f64,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
    pub jac_det: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ObAngles {
    pub phi0: f64,
    pub phi1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg.into()));
}

fn fail(status: ObStatus, msg: impl Into<String>) -> ObStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> ObStatus {
    match e.exit_code() {
        2 => ObStatus::InvalidCurve,
        3 => ObStatus::DynamicsFailure,
        4 => ObStatus::OptimizerFailure,
        _ => ObStatus::InvalidArgument,
    }
}

fn guarded<F: FnOnce() -> ObStatus>(f: F) -> ObStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ObStatus::Panic, "internal panic"),
    }
}

fn report(e: impl Into<Error>) -> ObStatus {
    let e = e.into();
    fail(status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, ObStatus> {
    if s.is_null() {
        return Err(fail(ObStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(ObStatus::InvalidArgument, "string is not valid UTF-8"))
}

unsafe fn curve_arg<'a>(c: *const ObCurve) -> Result<&'a ConvexCurve, ObStatus> {
    c.as_ref().map(|c| &c.inner).ok_or_else(|| fail(ObStatus::NullPointer, "null curve handle"))
}

fn hand_out(text: String, out: *mut *mut c_char) -> ObStatus {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            ObStatus::Ok
        }
        Err(_) => fail(ObStatus::InvalidArgument, "output contains an interior NUL"),
    }
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Builds a curve from its JSON description, e.g. `{"kind":"ellipse","a":2,"b":1}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_curve_from_json(json: *const c_char, out: *mut *mut ObCurve) -> ObStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        let text = try_ffi!(str_arg(json));
        match CurveSpec::from_json(text).and_then(|s| s.build()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ObCurve { inner }));
                ObStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// One of the built-in curves: `circle`, `ellipse` or `fourier`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_curve_preset(name: *const c_char, out: *mut *mut ObCurve) -> ObStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        let inner = match try_ffi!(str_arg(name)) {
            "circle" => presets::unit_circle(),
            "ellipse" => presets::ellipse_2_1(),
            "fourier" => presets::trefoil_005(),
            other => return fail(ObStatus::InvalidArgument, format!("unknown preset {other:?}")),
        };
        *out = Box::into_raw(Box::new(ObCurve { inner }));
        ObStatus::Ok
    })
}

/// Releases a curve. Null is ignored.
///
/// # Safety
/// `curve` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ob_curve_free(curve: *mut ObCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Radial function, its derivatives and the curvature at angle `phi`.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_curve_eval(curve: *const ObCurve, phi: f64, out: *mut ObCurveSample) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        let s = c.eval(phi);
        *out = ObCurveSample { r: s.r, r_prime: s.r_prime, r_second: s.r_second, chi: s.chi, curvature: s.curvature };
        ObStatus::Ok
    })
}

unsafe fn map_call(
    curve: *const ObCurve,
    x: f64,
    y: f64,
    clockwise: bool,
    inverse: bool,
    out_x: *mut f64,
    out_y: *mut f64,
) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out_x.is_null() || out_y.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        let orientation = if clockwise { Orientation::Cw } else { Orientation::Ccw };
        let map = BilliardMap::with_orientation(c, orientation);
        let result = PhasePoint::from_cartesian(c, PlanePoint::new(x, y))
            .and_then(|a| if inverse { map.inverse_step(&a) } else { map.step(&a) });
        match result {
            Ok(b) => {
                *out_x = b.cartesian.x;
                *out_y = b.cartesian.y;
                ObStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// Image of the exterior point `(x, y)` under the billiard map.
///
/// # Safety
/// `curve` must be a live handle; `out_x`, `out_y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_map_step(curve: *const ObCurve, x: f64, y: f64, clockwise: bool, out_x: *mut f64, out_y: *mut f64) -> ObStatus {
    map_call(curve, x, y, clockwise, false, out_x, out_y)
}

/// Preimage of the exterior point `(x, y)`.
///
/// # Safety
/// As for [`ob_map_step`].
#[no_mangle]
pub unsafe extern "C" fn ob_map_inverse_step(
    curve: *const ObCurve,
    x: f64,
    y: f64,
    clockwise: bool,
    out_x: *mut f64,
    out_y: *mut f64,
) -> ObStatus {
    map_call(curve, x, y, clockwise, true, out_x, out_y)
}

/// Generating function and derivatives at the chord `(phi, t)`, `t > 0`.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_s_derivatives(curve: *const ObCurve, phi: f64, t: f64, out: *mut ObSDerivatives) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        if !(t > 0.0 && t.is_finite() && phi.is_finite()) {
            return fail(ObStatus::InvalidArgument, format!("chord parameter must be positive, got {t}"));
        }
        let d = s_derivatives(c, ChordCoords::new(phi, t));
        *out = ObSDerivatives { s: d.s, s1: d.s1, s2: d.s2, s11: d.s11, s12: d.s12, s22: d.s22, jac_det: d.jac_det };
        ObStatus::Ok
    })
}

/// Endpoint angles of the chord `(phi, t)`.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_chord_to_angles(curve: *const ObCurve, phi: f64, t: f64, out: *mut ObAngles) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        let a = chord_to_angles(c, ChordCoords::new(phi, t));
        *out = ObAngles { phi0: a.phi0, phi1: a.phi1 };
        ObStatus::Ok
    })
}

/// Chord `(phi, t)` with endpoint angles `phi0 < phi1 < phi0 + pi`.
///
/// # Safety
/// `curve` must be a live handle; `out_phi`, `out_t` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_angles_to_chord(
    curve: *const ObCurve,
    phi0: f64,
    phi1: f64,
    out_phi: *mut f64,
    out_t: *mut f64,
) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out_phi.is_null() || out_t.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        match angles_to_chord(c, phi0, phi1, CHART_TOL) {
            Ok(ch) => {
                *out_phi = ch.phi;
                *out_t = ch.t;
                ObStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// `int sqrt(chi)/r dphi` about the curve's current origin.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_q_integral(curve: *const ObCurve, nodes: u32, out: *mut f64) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        if nodes == 0 {
            return fail(ObStatus::InvalidArgument, "need at least one node");
        }
        *out = q_integral(c, nodes as usize);
        ObStatus::Ok
    })
}

/// First iteration at which the radial variation at `(x, y)` turns radial
/// again; `*out_n` is `-1` when none occurs within `n_max` steps.
///
/// # Safety
/// `curve` must be a live handle; `out_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ob_conjugate_index(curve: *const ObCurve, x: f64, y: f64, n_max: u32, out_n: *mut i64) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out_n.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        let result = PhasePoint::from_cartesian(c, PlanePoint::new(x, y))
            .and_then(|seed| radial_conjugate_scan(c, &seed, n_max as usize));
        match result {
            Ok(n) => {
                *out_n = n.map_or(-1, |n| n as i64);
                ObStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// Full rigidity report as JSON. Pass `0` for either setting to use the default.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable. Free the string
/// with [`ob_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ob_rigidity_report_json(curve: *const ObCurve, phi_grid: u32, t_max: f64, out: *mut *mut c_char) -> ObStatus {
    guarded(|| {
        let c = try_ffi!(curve_arg(curve));
        if out.is_null() {
            return fail(ObStatus::NullPointer, "null output pointer");
        }
        let mut settings = ReportSettings::default();
        if phi_grid != 0 {
            settings.phi_grid = phi_grid as usize;
        }
        if t_max != 0.0 {
            settings.t_max = t_max;
        }
        if !(settings.phi_grid >= 8 && settings.t_max > 0.0) {
            return fail(ObStatus::InvalidArgument, "phi_grid must be at least 8 and t_max positive");
        }
        match rigidity_report(c, &settings) {
            Ok((r, _)) => match to_json(&r) {
                Ok(text) => hand_out(text, out),
                Err(e) => fail(ObStatus::InvalidArgument, e.to_string()),
            },
            Err(e) => report(e),
        }
    })
}

/// Message of the last failure on this thread, or null. Free with [`ob_string_free`].
#[no_mangle]
pub extern "C" fn ob_last_error() -> *mut c_char {
    LAST_ERROR
        .with(|e| e.borrow().clone())
        .and_then(|m| CString::new(m).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ob_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ob_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
