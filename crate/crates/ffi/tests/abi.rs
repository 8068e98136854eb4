use std::ffi::{CStr, CString};
use std::ptr;

use qgeom_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qg_last_error()) }.to_string_lossy().into_owned()
}

fn model(name: &str) -> *mut QgModel {
    let name = CString::new(name).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qg_model_new(name.as_ptr(), &mut m) }, QgStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn model_lifecycle() {
    let m = model("lin-coupled");
    let (mut np, mut nm) = (0usize, 0usize);
    assert_eq!(unsafe { qg_model_shape(m, &mut np, &mut nm) }, QgStatus::Ok);
    assert_eq!((np, nm), (3, 2));
    unsafe { qg_model_free(m) };
    unsafe { qg_model_free(ptr::null_mut()) };
}

#[test]
fn unknown_model_sets_error() {
    let name = CString::new("nope").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qg_model_new(name.as_ptr(), &mut m) }, QgStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("nope"));
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { qg_model_new(ptr::null(), ptr::null_mut()) }, QgStatus::NullPointer);
    let mut d = 0usize;
    assert_eq!(unsafe { qg_tensor_dim(ptr::null(), &mut d) }, QgStatus::NullPointer);
    assert!(last_error().starts_with("null pointer"));
}

#[test]
fn oscillator_ground_state_metric() {
    // X, Y, Z = 2, 0, 1 gives ω = √2 and g_XX = Z²/(32ω⁴) = 1/128.
    let m = model("gho");
    let point = [2.0, 0.0, 1.0];
    let qn = [0u32];
    let mut t = ptr::null_mut();
    let s = unsafe { qg_qgt(m, QgMethod::Perturbative, point.as_ptr(), 3, qn.as_ptr(), 1, 60, &mut t) };
    assert_eq!(s, QgStatus::Ok, "{}", last_error());
    let mut d = 0usize;
    assert_eq!(unsafe { qg_tensor_dim(t, &mut d) }, QgStatus::Ok);
    assert_eq!(d, 5);
    let mut re = vec![0.0; d * d];
    let mut im = vec![0.0; d * d];
    assert_eq!(unsafe { qg_tensor_values(t, re.as_mut_ptr(), im.as_mut_ptr(), d * d) }, QgStatus::Ok);
    assert!((re[0] - 1.0 / 128.0).abs() < 1e-10);
    // Phase block imaginary part is Ω/2.
    assert!((im[3 * d + 4] - 0.5).abs() < 1e-10);

    let mut label = [0 as std::ffi::c_char; 8];
    assert_eq!(unsafe { qg_tensor_label(t, 3, label.as_mut_ptr(), label.len()) }, QgStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(label.as_ptr()) }.to_str().unwrap(), "q");
    let mut tiny = [0 as std::ffi::c_char; 1];
    assert_eq!(unsafe { qg_tensor_label(t, 3, tiny.as_mut_ptr(), 1) }, QgStatus::BufferTooSmall);
    assert_eq!(unsafe { qg_tensor_values(t, re.as_mut_ptr(), im.as_mut_ptr(), 3) }, QgStatus::BufferTooSmall);
    unsafe {
        qg_tensor_free(t);
        qg_model_free(m);
    }
}

#[test]
fn overlap_fd_matches_perturbative() {
    let m = model("gho");
    let point = [2.0, 0.5, 1.0];
    let qn = [1u32];
    let mut values = Vec::new();
    for method in [QgMethod::Perturbative, QgMethod::OverlapFd] {
        let mut t = ptr::null_mut();
        assert_eq!(unsafe { qg_qgt(m, method, point.as_ptr(), 3, qn.as_ptr(), 1, 80, &mut t) }, QgStatus::Ok);
        let mut d = 0usize;
        unsafe { qg_tensor_dim(t, &mut d) };
        let mut re = vec![0.0; d * d];
        let mut im = vec![0.0; d * d];
        unsafe { qg_tensor_values(t, re.as_mut_ptr(), im.as_mut_ptr(), d * d) };
        values.push((d, re));
        unsafe { qg_tensor_free(t) };
    }
    let (dp, pert) = &values[0];
    let (df, fd) = &values[1];
    assert_eq!(*df, 3);
    for i in 0..3 {
        for j in 0..3 {
            assert!((pert[i * dp + j] - fd[i * df + j]).abs() < 1e-5);
        }
    }
    unsafe { qg_model_free(m) };
}

#[test]
fn domain_violation_status() {
    let m = model("gho");
    let point = [1.0, 2.0, 1.0];
    let qn = [0u32];
    let mut t = ptr::null_mut();
    let s = unsafe { qg_qgt(m, QgMethod::Perturbative, point.as_ptr(), 3, qn.as_ptr(), 1, 40, &mut t) };
    assert_eq!(s, QgStatus::Domain);
    assert!(t.is_null());
    assert!(!last_error().is_empty());
    unsafe { qg_model_free(m) };
}

#[test]
fn closed_forms_and_curvature() {
    let m = model("gho");
    let point = [2.0, 0.3, 1.0];
    let qn = [1u32];
    let q = CString::new("det-metric").unwrap();
    let mut v = f64::NAN;
    assert_eq!(unsafe { qg_closed_form_scalar(m, q.as_ptr(), point.as_ptr(), 3, qn.as_ptr(), 1, &mut v) }, QgStatus::Ok);
    // (X, Y) submanifold at fixed Z: b²Z²/(256ω⁶) with b = n² + n + 1.
    let w2: f64 = 2.0 - 0.09;
    assert!((v - 9.0 / (256.0 * w2.powi(3))).abs() < 1e-14);

    let coords = [0usize, 1];
    let s = unsafe { qg_scalar_curvature(m, point.as_ptr(), 3, qn.as_ptr(), 1, coords.as_ptr(), 2, &mut v) };
    assert_eq!(s, QgStatus::Ok, "{}", last_error());
    assert!((v + 16.0 / 3.0).abs() < 1e-4);

    let bad = CString::new("not-a-quantity").unwrap();
    let s = unsafe { qg_closed_form_scalar(m, bad.as_ptr(), point.as_ptr(), 3, qn.as_ptr(), 1, &mut v) };
    assert_eq!(s, QgStatus::InvalidArgument);
    unsafe { qg_model_free(m) };
}

#[test]
fn thermal_state_entanglement() {
    // σ = (s/2)·I has ν = s/2 and purity 1/s.
    let s = 3.0;
    let cov = [s / 2.0, 0.0, 0.0, s / 2.0];
    let (mut mu, mut ent, mut nu) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { qg_gaussian_entanglement(cov.as_ptr(), 1, &mut mu, &mut ent, &mut nu) }, QgStatus::Ok);
    assert!((mu - 1.0 / s).abs() < 1e-12);
    assert!((nu - 1.5).abs() < 1e-12);
    let want = 2.0 * 2f64.ln() - 1.0 * 1f64.ln();
    assert!((ent - want).abs() < 1e-12);

    let bad = [0.1, 0.0, 0.0, 0.1];
    assert_eq!(unsafe { qg_gaussian_entanglement(bad.as_ptr(), 1, &mut mu, &mut ent, &mut nu) }, QgStatus::Numerical);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/qgeom.h");
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for status in ["QG_STATUS_OK = 0", "QG_STATUS_DOMAIN = 3", "QG_STATUS_NUMERICAL = 4", "QG_STATUS_PANIC = 6"] {
        assert!(header.contains(status));
    }
}
