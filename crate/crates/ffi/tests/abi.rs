use std::ffi::{CStr, CString};
use std::ptr;

use msgr_ffi::*;

fn metric(spec: &str) -> *mut MsgrMetric {
    let s = CString::new(spec).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { msgr_metric_new(s.as_ptr(), &mut m) }, MsgrStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = msgr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(msgr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn pointwise_quantities() {
    let m = metric("flrw");
    let x = [0.0, 0.5, 0.5, 0.5];
    let mut g = [0.0; 16];
    let mut l = [0.0; 10];
    let mut lag = 0.0;
    let mut lep = 0.0;
    unsafe {
        assert_eq!(msgr_metric_at(m, x.as_ptr(), g.as_mut_ptr()), MsgrStatus::Ok);
        assert_eq!(msgr_eh_constraint(m, x.as_ptr(), l.as_mut_ptr()), MsgrStatus::Ok);
        assert_eq!(msgr_eh_lagrangian(m, x.as_ptr(), &mut lag), MsgrStatus::Ok);
        assert_eq!(msgr_ep_lagrangian(m, x.as_ptr(), &mut lep), MsgrStatus::Ok);
        msgr_metric_free(m);
    }
    assert_eq!(g[0], -1.0);
    assert_eq!(g[5], 1.0);
    assert!((l[0].abs() - 0.03).abs() < 1e-12);
    assert!((lag - lep).abs() < 1e-12);
}

#[test]
fn vacuum_residuals_vanish() {
    let m = metric("schwarzschild:m=1");
    let x = [0.3, 4.0, 1.1, 2.0];
    let (mut a, mut b) = (1.0, 1.0);
    unsafe {
        assert_eq!(msgr_eh_field_equation_residual(m, x.as_ptr(), &mut a), MsgrStatus::Ok);
        assert_eq!(msgr_ep_field_equation_residual(m, x.as_ptr(), &mut b), MsgrStatus::Ok);
        msgr_metric_free(m);
    }
    assert!(a < 1e-8 && b < 1e-8, "{a} {b}");
}

#[test]
fn errors_carry_status_and_message() {
    let mut m = ptr::null_mut();
    let bad = CString::new("no-such-metric").unwrap();
    assert_eq!(unsafe { msgr_metric_new(bad.as_ptr(), &mut m) }, MsgrStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("no-such-metric"));

    assert_eq!(unsafe { msgr_metric_new(ptr::null(), &mut m) }, MsgrStatus::NullPointer);

    let text = CString::new("[metric]\nname = x\ng 0 0 = -1 +\n").unwrap();
    assert_eq!(unsafe { msgr_metric_from_text(text.as_ptr(), &mut m) }, MsgrStatus::InvalidArgument);
    assert!(last_error().contains("line 3"));

    let s = metric("schwarzschild");
    let inside_horizon = [0.0, 1.0, 1.0, 0.0];
    let mut v = 0.0;
    assert_eq!(unsafe { msgr_eh_lagrangian(s, inside_horizon.as_ptr(), &mut v) }, MsgrStatus::Domain);
    unsafe {
        assert_eq!(msgr_eh_lagrangian(s, ptr::null(), &mut v), MsgrStatus::NullPointer);
        msgr_metric_free(s);
        msgr_metric_free(ptr::null_mut());
    }
}

#[test]
fn metric_from_text() {
    let text = CString::new("[metric]\nname = flat\ng 0 0 = -1\ng 1 1 = 1\ng 2 2 = 1\ng 3 3 = 1\n").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { msgr_metric_from_text(text.as_ptr(), &mut m) }, MsgrStatus::Ok);
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(msgr_check(m, MsgrModel::Ep, 3, 1, 1, &mut r), MsgrStatus::Ok);
        assert_eq!(msgr_report_passed(r), 1);
        msgr_report_free(r);
        msgr_metric_free(m);
    }
}

#[test]
fn check_report_round_trip() {
    let m = metric("flrw");
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(msgr_check(m, MsgrModel::Eh, 4, 7, 0, &mut r), MsgrStatus::Ok);
        assert_eq!(msgr_report_passed(r), 0);
        let n = msgr_report_family_count(r);
        assert_eq!(n, 7);
        let mut found = false;
        for i in 0..n {
            let mut f =
                MsgrFamilyRecord { name: ptr::null(), points: 0, max_resid: 0.0, mean_resid: 0.0, tol: 0.0, pass: -1 };
            assert_eq!(msgr_report_family(r, i, &mut f), MsgrStatus::Ok);
            assert_eq!(f.points, 4);
            if CStr::from_ptr(f.name).to_str().unwrap() == "einstein-constraint" {
                found = true;
                assert_eq!(f.pass, 0);
                assert!(f.max_resid > 0.02);
            }
        }
        assert!(found);
        let mut f = std::mem::zeroed::<MsgrFamilyRecord>();
        assert_eq!(msgr_report_family(r, n, &mut f), MsgrStatus::InvalidArgument);

        let mut s = ptr::null_mut();
        assert_eq!(msgr_report_render(r, MsgrFormat::Json, &mut s), MsgrStatus::Ok);
        let json = CStr::from_ptr(s).to_str().unwrap().to_owned();
        msgr_string_free(s);
        assert!(json.contains("\"verdict\": \"fail\""));
        assert_eq!(msgr_report_render(r, MsgrFormat::Csv, &mut s), MsgrStatus::Ok);
        assert!(CStr::from_ptr(s).to_str().unwrap().starts_with("family,points"));
        msgr_string_free(s);

        // the same request from another handle renders identically
        let mut r2 = ptr::null_mut();
        assert_eq!(msgr_check(m, MsgrModel::Eh, 4, 7, 2, &mut r2), MsgrStatus::Ok);
        assert_eq!(msgr_report_render(r2, MsgrFormat::Json, &mut s), MsgrStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), json);
        msgr_string_free(s);
        msgr_report_free(r2);
        msgr_report_free(r);
        msgr_metric_free(m);
        assert_eq!(msgr_report_passed(ptr::null()), -1);
    }
}
