use std::ffi::{CStr, CString};
use std::ptr;

use fqft_lab_ffi::*;

fn last_error() -> String {
    let p = fqft_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn circle_logdet_matches_closed_form() {
    let mut v = 0.0;
    assert_eq!(
        unsafe { fqft_logdet_circle(1.0, 1.0, 0.0, &mut v) },
        FqftStatus::Ok
    );
    assert!((v - 2.0 * (2.0 * 0.5f64.sinh()).ln()).abs() < 1e-12);
    assert!(fqft_last_error_message().is_null());
}

#[test]
fn determinant_gluing_through_the_abi() {
    let (mut a, mut b, mut ab, mut dtn) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(
            fqft_logdet_cylinder(1.0, 0.8, 0.3, 0.4, &mut a),
            FqftStatus::Ok
        );
        assert_eq!(
            fqft_logdet_cylinder(1.0, 0.8, 0.3, 1.1, &mut b),
            FqftStatus::Ok
        );
        assert_eq!(
            fqft_logdet_cylinder(1.0, 0.8, 0.3, 1.5, &mut ab),
            FqftStatus::Ok
        );
        assert_eq!(
            fqft_logdet_dtn(1.0, 0.8, 0.3, 0.4, 1.1, &mut dtn),
            FqftStatus::Ok
        );
    }
    assert!((ab - a - b - dtn).abs() < 1e-9);
}

#[test]
fn invalid_arguments_report_status_and_message() {
    let mut v = 0.0;
    assert_eq!(
        unsafe { fqft_logdet_circle(-1.0, 1.0, 0.0, &mut v) },
        FqftStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { fqft_logdet_torus(1.0, 1.0, 0.0, 1.0, ptr::null_mut()) },
        FqftStatus::NullPointer
    );
    assert!(last_error().contains("null"));
}

#[test]
fn amplitude_compose_and_trace() {
    unsafe {
        let (mut a1, mut a2, mut glued, mut whole) = (
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(
            fqft_amplitude_cylinder(1.0, ptr::null(), 0, 0.5, 1.0, 40, false, &mut a1),
            FqftStatus::Ok
        );
        assert_eq!(
            fqft_amplitude_cylinder(1.0, ptr::null(), 0, 0.8, 1.0, 40, false, &mut a2),
            FqftStatus::Ok
        );
        assert_eq!(
            fqft_amplitude_cylinder(1.0, ptr::null(), 0, 1.3, 1.0, 40, false, &mut whole),
            FqftStatus::Ok
        );
        assert_eq!(fqft_amplitude_compose(a2, a1, &mut glued), FqftStatus::Ok);

        let (mut p, mut q) = (0.0, 0.0);
        fqft_amplitude_log_prefactor(glued, &mut p);
        fqft_amplitude_log_prefactor(whole, &mut q);
        assert!((p - q).abs() < 1e-9, "{p} vs {q}");

        let (mut t, mut det) = (0.0, 0.0);
        assert_eq!(fqft_amplitude_log_trace(glued, &mut t), FqftStatus::Ok);
        fqft_logdet_torus(1.0, 1.0, 0.0, 1.3, &mut det);
        assert!((t + 0.5 * det).abs() < 1e-8);

        for h in [a1, a2, glued, whole] {
            fqft_amplitude_free(h);
        }
        fqft_amplitude_free(ptr::null_mut());
    }
}

#[test]
fn mismatched_circles_refuse_to_compose() {
    unsafe {
        let (mut a1, mut a2, mut out) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        let angles = [0.7];
        fqft_amplitude_cylinder(1.0, ptr::null(), 0, 0.5, 1.0, 8, false, &mut a1);
        fqft_amplitude_cylinder(1.0, angles.as_ptr(), 1, 0.5, 1.0, 8, false, &mut a2);
        assert_eq!(fqft_amplitude_compose(a2, a1, &mut out), FqftStatus::Scene);
        assert!(out.is_null());
        fqft_amplitude_free(a1);
        fqft_amplitude_free(a2);
    }
}

#[test]
fn scene_verification_returns_json_report() {
    let scene = include_str!("../../core/scenes/two_cylinders.json");
    let text = CString::new(scene).unwrap();
    let (mut passed, mut report) = (false, ptr::null_mut());
    unsafe {
        assert_eq!(
            fqft_verify_scene(text.as_ptr(), false, &mut passed, &mut report),
            FqftStatus::Ok
        );
        assert!(passed);
        let json: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(json["passed"], true);
        fqft_string_free(report);
    }
}

#[test]
fn malformed_scene_is_a_scene_error() {
    let text = CString::new("{\"theory\": {}}").unwrap();
    let (mut passed, mut report) = (false, ptr::null_mut());
    assert_eq!(
        unsafe { fqft_verify_scene(text.as_ptr(), false, &mut passed, &mut report) },
        FqftStatus::Scene
    );
    assert!(report.is_null());
    assert!(last_error().contains("line"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/fqft_lab.h");
    for name in [
        "fqft_last_error_message",
        "fqft_logdet_circle",
        "fqft_logdet_cylinder",
        "fqft_logdet_torus",
        "fqft_logdet_dtn",
        "fqft_amplitude_cylinder",
        "fqft_amplitude_compose",
        "fqft_amplitude_log_prefactor",
        "fqft_amplitude_log_trace",
        "fqft_amplitude_free",
        "fqft_verify_scene",
        "fqft_string_free",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name}");
    }
}
