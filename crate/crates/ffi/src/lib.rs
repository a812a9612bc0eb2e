//! C ABI over `fqft-lab`.
//!
//! Every function returns an [`FqftStatus`]. On failure the message is kept per thread
//! and can be read with [`fqft_last_error_message`] until the next call on that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fqft_lab::cli::SceneFile;
use fqft_lab::fqft::{
    amplitude_with, compose_amplitudes, trace_amplitude, verify_functoriality, Amplitude,
    Normalization, VerifyOptions,
};
use fqft_lab::geom::{CircleObject, CylinderMorphism, TheoryConfig};
use fqft_lab::zeta::{
    logdet_circle_continued, logdet_cylinder_dirichlet, logdet_dtn_sum, logdet_torus,
    EpsteinZeta1D, SeriesControl,
};
use fqft_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqftStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
    Numerical = 4,
    Scene = 5,
    Panic = 6,
}

/// Opaque amplitude handle. Release with [`fqft_amplitude_free`].
pub struct FqftAmplitude(Amplitude);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FqftStatus {
    match e {
        Error::InvalidParameter(_) | Error::DimensionMismatch(_) | Error::ZetaPole { .. } => {
            FqftStatus::InvalidArgument
        }
        Error::NotConverged(_) => FqftStatus::NotConverged,
        Error::Scene(_) | Error::IncompatibleCircles(_) | Error::Port(_) => FqftStatus::Scene,
        _ => FqftStatus::Numerical,
    }
}

struct Failure(FqftStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FqftStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FqftStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FqftStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FqftStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn fqft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// ln det of the circle Laplacian plus mass², twisted by `twist` radians.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_logdet_circle(
    circumference: f64,
    mass: f64,
    twist: f64,
    out: *mut f64,
) -> FqftStatus {
    guard(|| {
        let z = EpsteinZeta1D::new(circumference, mass, twist)?;
        write(
            out,
            logdet_circle_continued(&z, &SeriesControl::default())?.value,
        )
    })
}

/// ln det on a cylinder of the given length with Dirichlet ends.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_logdet_cylinder(
    circumference: f64,
    mass: f64,
    twist: f64,
    length: f64,
    out: *mut f64,
) -> FqftStatus {
    guard(|| {
        let z = EpsteinZeta1D::new(circumference, mass, twist)?;
        write(
            out,
            logdet_cylinder_dirichlet(&z, length, &SeriesControl::default())?.value,
        )
    })
}

/// ln det on the torus obtained by closing a cylinder of the given length.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_logdet_torus(
    circumference: f64,
    mass: f64,
    twist: f64,
    length: f64,
    out: *mut f64,
) -> FqftStatus {
    guard(|| {
        let z = EpsteinZeta1D::new(circumference, mass, twist)?;
        write(
            out,
            logdet_torus(&z, length, &SeriesControl::default())?.value,
        )
    })
}

/// ln det of the summed Dirichlet-to-Neumann operator on the seam between
/// cylinders of lengths `length1` and `length2`.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_logdet_dtn(
    circumference: f64,
    mass: f64,
    twist: f64,
    length1: f64,
    length2: f64,
    out: *mut f64,
) -> FqftStatus {
    guard(|| {
        let z = EpsteinZeta1D::new(circumference, mass, twist)?;
        write(
            out,
            logdet_dtn_sum(&z, length1, length2, &SeriesControl::default())?.value,
        )
    })
}

/// Amplitude of a cylinder. `angles` lists holonomy eigen-angles, one per real
/// dimension; pass null and 0 for the trivial line bundle.
///
/// # Safety
/// `angles` must be null or point to `n_angles` doubles; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_amplitude_cylinder(
    circumference: f64,
    angles: *const f64,
    n_angles: usize,
    length: f64,
    mass: f64,
    k_max: usize,
    projective: bool,
    out: *mut *mut FqftAmplitude,
) -> FqftStatus {
    guard(|| {
        let circle = match (angles.is_null(), n_angles) {
            (_, 0) => CircleObject::trivial(circumference)?,
            (true, _) => return Err(null("angles")),
            (false, n) => CircleObject::new(
                circumference,
                std::slice::from_raw_parts(angles, n).to_vec(),
            )?,
        };
        let c = CylinderMorphism::new("cylinder", circle, length)?;
        let cfg = TheoryConfig::with_mass(mass, k_max)?;
        let normalization = if projective {
            Normalization::Projective
        } else {
            Normalization::Zeta
        };
        let a = amplitude_with(&c, &cfg, normalization, &SeriesControl::default())?;
        write(out, Box::into_raw(Box::new(FqftAmplitude(a))))
    })
}

/// Glues the outgoing circle of `first` to the incoming circle of `second`.
///
/// # Safety
/// Handles must be null or live; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_amplitude_compose(
    second: *const FqftAmplitude,
    first: *const FqftAmplitude,
    out: *mut *mut FqftAmplitude,
) -> FqftStatus {
    guard(|| {
        let (a2, a1) = (
            second.as_ref().ok_or_else(|| null("second"))?,
            first.as_ref().ok_or_else(|| null("first"))?,
        );
        let wiring: Vec<usize> = (0..a1.0.factors().len()).collect();
        let a = compose_amplitudes(&a2.0, &a1.0, &wiring)?;
        write(out, Box::into_raw(Box::new(FqftAmplitude(a))))
    })
}

/// # Safety
/// `a` must be null or live; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_amplitude_log_prefactor(
    a: *const FqftAmplitude,
    out: *mut f64,
) -> FqftStatus {
    guard(|| {
        write(
            out,
            a.as_ref()
                .ok_or_else(|| null("amplitude"))?
                .0
                .log_prefactor(),
        )
    })
}

/// ln of the trace, i.e. the torus partition function for cylinder amplitudes.
///
/// # Safety
/// `a` must be null or live; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fqft_amplitude_log_trace(
    a: *const FqftAmplitude,
    out: *mut f64,
) -> FqftStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| null("amplitude"))?;
        write(out, trace_amplitude(&a.0)?.value)
    })
}

/// # Safety
/// `a` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fqft_amplitude_free(a: *mut FqftAmplitude) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Runs the functoriality checks on a scene given as JSON text and returns the
/// report as JSON. Release the string with [`fqft_string_free`].
///
/// # Safety
/// `scene_json` must be null or a nul-terminated string; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fqft_verify_scene(
    scene_json: *const c_char,
    projective: bool,
    passed: *mut bool,
    report_json: *mut *mut c_char,
) -> FqftStatus {
    guard(|| {
        if scene_json.is_null() {
            return Err(null("scene_json"));
        }
        let text = CStr::from_ptr(scene_json).to_str().map_err(|e| {
            Failure(
                FqftStatus::InvalidArgument,
                format!("scene is not UTF-8: {e}"),
            )
        })?;
        let file = SceneFile::parse(text).map_err(|e| Failure(FqftStatus::Scene, e.to_string()))?;
        let scene = file
            .to_scene()
            .map_err(|e| Failure(FqftStatus::Scene, e.to_string()))?;
        let opts = VerifyOptions {
            normalization: if projective {
                Normalization::Projective
            } else {
                Normalization::Zeta
            },
            tolerances: file.tolerances(),
            series: SeriesControl::default(),
        };
        let report = verify_functoriality(&scene, &opts)?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write(passed, report.passed)?;
        write(
            report_json,
            CString::new(json).expect("json has no nul").into_raw(),
        )
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fqft_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
