use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sinhgordon_ffi::*;

fn c(re: f64, im: f64) -> SgComplex {
    SgComplex { re, im }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sg_last_error_message()) }.to_string_lossy().into_owned()
}

fn params() -> *mut SgParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sg_params_from_b(0.25, 1.0, &mut p) }, SgStatus::Ok);
    p
}

#[test]
fn s_matrix_at_origin() {
    let p = params();
    let mut s = c(0.0, 0.0);
    assert_eq!(unsafe { sg_s_matrix(p, c(0.0, 0.0), &mut s) }, SgStatus::Ok);
    assert_eq!(s, c(-1.0, 0.0));
    assert_eq!(last_error(), "");
    unsafe { sg_params_free(p) };
}

#[test]
fn invalid_coupling_sets_message() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sg_params_from_b(0.9, 1.0, &mut p) }, SgStatus::InvalidParam);
    assert!(p.is_null());
    assert!(last_error().contains("0.9"));
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { sg_log_gamma(c(1.0, 0.0), ptr::null_mut()) }, SgStatus::NullPointer);
    assert_eq!(unsafe { sg_s_matrix(ptr::null(), c(0.0, 0.0), ptr::null_mut()) }, SgStatus::NullPointer);
    unsafe {
        sg_params_free(ptr::null_mut());
        sg_operator_free(ptr::null_mut());
        sg_string_free(ptr::null_mut());
    }
}

#[test]
fn special_functions() {
    let mut out = c(0.0, 0.0);
    assert_eq!(unsafe { sg_log_gamma(c(5.0, 0.0), &mut out) }, SgStatus::Ok);
    assert!((out.re - 24f64.ln()).abs() < 1e-13);
    assert_eq!(unsafe { sg_log_barnes_g(c(4.0, 0.0), &mut out) }, SgStatus::Ok);
    assert!((out.re - 2f64.ln()).abs() < 1e-12 && out.im.abs() < 1e-12);
    assert_eq!(unsafe { sg_log_gamma(c(0.0, 0.0), &mut out) }, SgStatus::Pole);
}

#[test]
fn field_form_factors_and_adjoint() {
    let p = params();
    let mut field = ptr::null_mut();
    assert_eq!(unsafe { sg_operator_field(p, &mut field) }, SgStatus::Ok);
    let beta = [c(0.3, 0.0), c(-0.4, 0.0)];
    let mut f = c(1.0, 1.0);
    assert_eq!(unsafe { sg_form_factor(field, p, beta.as_ptr(), 2, &mut f) }, SgStatus::Ok);
    assert!(f.re.abs() < 1e-14 && f.im.abs() < 1e-14, "even form factors of the field vanish");
    let mut adj = ptr::null_mut();
    assert_eq!(unsafe { sg_operator_adjoint(field, &mut adj) }, SgStatus::Ok);
    let mut g = c(0.0, 0.0);
    let b1 = [c(0.2, 0.0)];
    unsafe {
        assert_eq!(sg_form_factor(field, p, b1.as_ptr(), 1, &mut f), SgStatus::Ok);
        assert_eq!(sg_form_factor(adj, p, b1.as_ptr(), 1, &mut g), SgStatus::Ok);
    }
    assert!((f.re - g.re).abs() < 1e-13 && (f.im - g.im).abs() < 1e-13);
    unsafe {
        sg_operator_free(adj);
        sg_operator_free(field);
        sg_params_free(p);
    }
}

#[test]
fn synthetic_operator_vacuum_value() {
    let p = params();
    let label = CString::new("A").unwrap();
    let coeffs = [c(0.5, 0.0), c(0.0, 0.3)];
    let mut op = ptr::null_mut();
    assert_eq!(unsafe { sg_operator_synthetic(label.as_ptr(), 0.0, c(0.8, 0.0), coeffs.as_ptr(), 2, &mut op) }, SgStatus::Ok);
    let mut f = c(0.0, 0.0);
    assert_eq!(unsafe { sg_form_factor(op, p, ptr::null(), 0, &mut f) }, SgStatus::Ok);
    assert_eq!(f, c(0.5, 0.0));
    unsafe {
        sg_operator_free(op);
        sg_params_free(p);
    }
}

#[test]
fn two_point_shells_and_buffer_check() {
    let p = params();
    let mut field = ptr::null_mut();
    assert_eq!(unsafe { sg_operator_field(p, &mut field) }, SgStatus::Ok);
    let mut shells = [c(0.0, 0.0); 3];
    assert_eq!(unsafe { sg_two_point_shells(field, p, 2.0, 3, shells.as_mut_ptr(), 3) }, SgStatus::BufferTooSmall);
    assert_eq!(unsafe { sg_two_point_shells(field, p, 2.0, 2, shells.as_mut_ptr(), 3) }, SgStatus::Ok);
    // |F_1|² K0(2)/π with the frozen K0(2) value.
    let mut f1 = c(0.0, 0.0);
    let zero = [c(0.0, 0.0)];
    assert_eq!(unsafe { sg_form_factor(field, p, zero.as_ptr(), 1, &mut f1) }, SgStatus::Ok);
    let expected = (f1.re * f1.re + f1.im * f1.im) * 0.113_893_872_749_533_44 / std::f64::consts::PI;
    assert!((shells[1].re - expected).abs() < 1e-6 * expected);
    assert_eq!(shells[0], c(0.0, 0.0));
    unsafe {
        sg_operator_free(field);
        sg_params_free(p);
    }
}

#[test]
fn axiom_report_round_trip() {
    let check = CString::new("s_add").unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { sg_run_axioms(check.as_ptr(), ptr::null(), &mut report) }, SgStatus::Ok);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { sg_string_free(report) };
    let v: Vec<serde_like::Record> = serde_like::parse(&text);
    assert_eq!(v.len(), 3);
    assert!(v.iter().all(|r| r.verdict == "PASS"));

    let bad = CString::new("nope").unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { sg_run_axioms(bad.as_ptr(), ptr::null(), &mut report) }, SgStatus::Config);
    assert!(report.is_null());
    let cfg = CString::new("{\"caps\": {\"n_total\": 0}}").unwrap();
    assert_eq!(unsafe { sg_run_axioms(check.as_ptr(), cfg.as_ptr(), &mut report) }, SgStatus::Config);
}

/// Minimal verdict extraction, so the FFI crate needs no JSON dependency.
mod serde_like {
    pub struct Record {
        pub verdict: String,
    }

    pub fn parse(text: &str) -> Vec<Record> {
        text.match_indices("\"verdict\":\"")
            .map(|(i, m)| {
                let rest = &text[i + m.len()..];
                Record { verdict: rest[..rest.find('"').unwrap()].to_string() }
            })
            .collect()
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/sinhgordon.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for name in [
        "sg_last_error_message",
        "sg_params_from_b",
        "sg_params_from_g",
        "sg_s_matrix",
        "sg_form_factor",
        "sg_two_point_shells",
        "sg_run_axioms",
        "sg_string_free",
        "SG_STATUS_OK",
        "typedef struct SgParams SgParams",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let src = std::env::temp_dir().join(format!("sinhgordon_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"sinhgordon.h\"\nint main(void) { SgParams *p = 0; return sg_params_from_b(0.25, 1.0, &p) == SG_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc").arg("-fsyntax-only").arg("-Wall").arg("-Werror").arg("-I").arg(dir.join("include")).arg(&src).status();
    let _ = std::fs::remove_file(&src);
    match status {
        Ok(s) => assert!(s.success(), "header does not compile as C"),
        Err(e) => eprintln!("no C compiler available ({e}); header syntax not checked"),
    }
}
