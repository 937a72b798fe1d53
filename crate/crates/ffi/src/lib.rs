//! C ABI over the dolphin-tail toolkit.
//!
//! Curves and skeletons cross the boundary as opaque handles that the caller
//! frees with the matching `*_free` function. Every fallible call returns a
//! [`DtStatus`]; on failure, [`dt_last_error`] holds a message for the
//! calling thread. Strings returned by the library are freed with
//! [`dt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dolphin_tail::energetics::{self, SwimResult};
use dolphin_tail::explorer::{self, DesignRecord, Source, SwimSettings};
use dolphin_tail::profile::{self, FitOptions, ProfileFit};
use dolphin_tail::skeleton::{self, generate_skeleton, SkeletonGraph, SkeletonSpec};
use dolphin_tail::tendon::{self, bend_from_cables, route_cables, stiffnesses_from_graph, ActuationCommand};
use dolphin_tail::{export, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ComputationFailed = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Fitted upper and lower body contours.
pub struct DtCurves(ProfileFit);

/// A generated or parsed skeleton graph.
pub struct DtSkeleton(SkeletonGraph);

/// Swim outcome. `cot` is NaN when the tail produces no forward speed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtSwimResult {
    pub speed_m_s: f64,
    pub speed_bl_s: f64,
    pub power_w: f64,
    pub mass_kg: f64,
    pub cot: f64,
    pub body_length_m: f64,
}

impl From<SwimResult> for DtSwimResult {
    fn from(r: SwimResult) -> Self {
        Self {
            speed_m_s: r.speed,
            speed_bl_s: r.speed_bl,
            power_w: r.power,
            mass_kg: r.mass,
            cot: r.cot.unwrap_or(f64::NAN),
            body_length_m: r.body_length,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DtStatus, msg: impl Into<String>) -> DtStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> DtStatus {
    let status = if e.is_input_error() {
        DtStatus::InvalidInput
    } else {
        DtStatus::ComputationFailed
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into [`DtStatus::Panic`].
fn guard(f: impl FnOnce() -> DtStatus) -> DtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(DtStatus::Panic, "internal panic"),
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, DtStatus> {
    if s.is_null() {
        return Err(fail(DtStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(DtStatus::InvalidInput, "string argument is not UTF-8"))
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return from_error(err),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(DtStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default fit of the bundled reference profile.
#[no_mangle]
pub extern "C" fn dt_curves_reference() -> *mut DtCurves {
    catch_unwind(|| Box::into_raw(Box::new(DtCurves(profile::reference_fit())))).unwrap_or(ptr::null_mut())
}

/// Fits a profile CSV with the default dorsal excision.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_curves_fit(path: *const c_char, degree: u32, out: *mut *mut DtCurves) -> DtStatus {
    guard(|| {
        non_null!(out);
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let samples = try_ffi!(profile::load_profile_path(path.as_ref()));
        let opts = FitOptions {
            degree: degree as usize,
            ..FitOptions::default()
        };
        let fit = try_ffi!(profile::process_and_fit(&samples, &opts));
        *out = Box::into_raw(Box::new(DtCurves(fit)));
        DtStatus::Ok
    })
}

/// Mean squared residuals of the upper and lower fits, m^2.
///
/// # Safety
/// `curves` must be a live handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dt_curves_mse(curves: *const DtCurves, mse_upper: *mut f64, mse_lower: *mut f64) -> DtStatus {
    guard(|| {
        non_null!(curves, mse_upper, mse_lower);
        let r = (*curves).0.report;
        *mse_upper = r.mse_upper;
        *mse_lower = r.mse_lower;
        DtStatus::Ok
    })
}

/// # Safety
/// `curves` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dt_curves_free(curves: *mut DtCurves) {
    if !curves.is_null() {
        drop(Box::from_raw(curves));
    }
}

unsafe fn build_skeleton(curves: *const DtCurves, spec: &SkeletonSpec, out: *mut *mut DtSkeleton) -> DtStatus {
    non_null!(curves, out);
    let fit = &(*curves).0;
    let graph = try_ffi!(generate_skeleton(spec, &fit.upper, &fit.lower));
    *out = Box::into_raw(Box::new(DtSkeleton(graph)));
    DtStatus::Ok
}

/// Skeleton for a preset label (`type1` .. `type6`).
///
/// # Safety
/// `curves` must be a live handle, `label` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_skeleton_preset(
    curves: *const DtCurves,
    label: *const c_char,
    out: *mut *mut DtSkeleton,
) -> DtStatus {
    guard(|| {
        let label = match read_str(label) {
            Ok(l) => l,
            Err(s) => return s,
        };
        let spec = try_ffi!(skeleton::preset(label));
        build_skeleton(curves, &spec, out)
    })
}

/// Skeleton with explicit height ratio, thickness ratio and rib count; other
/// parameters take their defaults.
///
/// # Safety
/// `curves` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_skeleton_new(
    curves: *const DtCurves,
    h1: f64,
    h2: f64,
    thickness_ratio: f64,
    n_ribs: u32,
    out: *mut *mut DtSkeleton,
) -> DtStatus {
    guard(|| {
        let spec = SkeletonSpec {
            n_ribs: n_ribs as usize,
            ..SkeletonSpec::with_ratios(h1, h2, thickness_ratio)
        };
        try_ffi!(spec.validate());
        build_skeleton(curves, &spec, out)
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_skeleton_from_json(json: *const c_char, out: *mut *mut DtSkeleton) -> DtStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let graph = try_ffi!(export::skeleton_from_json(text));
        *out = Box::into_raw(Box::new(DtSkeleton(graph)));
        DtStatus::Ok
    })
}

/// Skeleton JSON; free with [`dt_string_free`]. Null if `skeleton` is null.
///
/// # Safety
/// `skeleton` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_skeleton_to_json(skeleton: *const DtSkeleton) -> *mut c_char {
    if skeleton.is_null() {
        set_error("`skeleton` is null".into());
        return ptr::null_mut();
    }
    into_c_string(export::skeleton_to_json(&(*skeleton).0))
}

/// SVG drawing in millimetres; free with [`dt_string_free`]. Null on failure.
///
/// # Safety
/// `skeleton` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_skeleton_to_svg(skeleton: *const DtSkeleton) -> *mut c_char {
    if skeleton.is_null() {
        set_error("`skeleton` is null".into());
        return ptr::null_mut();
    }
    match export::skeleton_to_svg(&(*skeleton).0) {
        Ok(doc) => into_c_string(doc.render()),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Number of ribs, or 0 for a null handle.
///
/// # Safety
/// `skeleton` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_skeleton_rib_count(skeleton: *const DtSkeleton) -> usize {
    if skeleton.is_null() {
        return 0;
    }
    (*skeleton).0.ribs().len()
}

/// # Safety
/// `skeleton` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dt_skeleton_free(skeleton: *mut DtSkeleton) {
    if !skeleton.is_null() {
        drop(Box::from_raw(skeleton));
    }
}

/// Solves the bent pose for cable displacements (metres, positive pulls).
///
/// Writes the joint angles to `angles` and their count to `n_angles`. When
/// `capacity` is too small nothing is written except `n_angles`, and
/// [`DtStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `skeleton` must be a live handle, `angles` must hold `capacity` doubles
/// and `n_angles` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_bend(
    skeleton: *const DtSkeleton,
    delta_top: f64,
    delta_bottom: f64,
    angles: *mut f64,
    capacity: usize,
    n_angles: *mut usize,
) -> DtStatus {
    guard(|| {
        non_null!(skeleton, n_angles);
        let graph = &(*skeleton).0;
        let routing = try_ffi!(route_cables(graph));
        let k = stiffnesses_from_graph(graph, tendon::DEFAULT_K_REF);
        let pose = try_ffi!(bend_from_cables(
            graph,
            &routing,
            &ActuationCommand::new(delta_top, delta_bottom),
            &k
        ));
        let theta = pose.segment_angles();
        *n_angles = theta.len();
        if capacity < theta.len() {
            return fail(DtStatus::BufferTooSmall, format!("need room for {} angles", theta.len()));
        }
        non_null!(angles);
        ptr::copy_nonoverlapping(theta.as_ptr(), angles, theta.len());
        DtStatus::Ok
    })
}

/// Steady swimming under the default hydrodynamic and power models. With
/// `calibrate_speed > 0`, drag is first tuned so this skeleton swims at that
/// speed.
///
/// # Safety
/// `skeleton` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_swim(
    skeleton: *const DtSkeleton,
    amplitude: f64,
    frequency: f64,
    calibrate_speed: f64,
    out: *mut DtSwimResult,
) -> DtStatus {
    guard(|| {
        non_null!(skeleton, out);
        let graph = &(*skeleton).0;
        let mut settings = SwimSettings::default();
        settings.actuation.amplitude_m = amplitude;
        settings.actuation.frequency_hz = frequency;
        if calibrate_speed > 0.0 {
            settings = try_ffi!(explorer::calibrate_settings(graph, &settings, calibrate_speed));
        }
        *out = try_ffi!(explorer::simulate(graph, &settings)).into();
        DtStatus::Ok
    })
}

/// Cost of transport P / (m v).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_cot(power: f64, mass: f64, speed: f64, out: *mut f64) -> DtStatus {
    guard(|| {
        non_null!(out);
        *out = try_ffi!(energetics::cot(power, mass, speed));
        DtStatus::Ok
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_speed_bl(speed: f64, body_length: f64, out: *mut f64) -> DtStatus {
    guard(|| {
        non_null!(out);
        *out = try_ffi!(energetics::speed_bl(speed, body_length));
        DtStatus::Ok
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_runtime_hours(battery_wh: f64, power_w: f64, out: *mut f64) -> DtStatus {
    guard(|| {
        non_null!(out);
        *out = try_ffi!(energetics::runtime_hours(battery_wh, power_w));
        DtStatus::Ok
    })
}

/// Marks the speed/COT non-dominated points: `mask[i]` is 1 on the front,
/// 0 otherwise. NaN COT excludes a point.
///
/// # Safety
/// `speeds`, `cots` and `mask` must each hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn dt_pareto_mask(speeds: *const f64, cots: *const f64, n: usize, mask: *mut u8) -> DtStatus {
    guard(|| {
        if n == 0 {
            return DtStatus::Ok;
        }
        non_null!(speeds, cots, mask);
        let speeds = std::slice::from_raw_parts(speeds, n);
        let cots = std::slice::from_raw_parts(cots, n);
        let records: Vec<DesignRecord> = speeds
            .iter()
            .zip(cots)
            .enumerate()
            .map(|(i, (&speed, &cot))| DesignRecord {
                label: i.to_string(),
                spec: SkeletonSpec::default(),
                result: Some(SwimResult {
                    speed,
                    speed_bl: 0.0,
                    power: 0.0,
                    mass: 0.0,
                    cot: (!cot.is_nan()).then_some(cot),
                    body_length: 0.0,
                }),
                error: None,
                source: Source::Simulated,
            })
            .collect();
        for (i, keep) in explorer::pareto_mask(&records).into_iter().enumerate() {
            *mask.add(i) = keep as u8;
        }
        DtStatus::Ok
    })
}
