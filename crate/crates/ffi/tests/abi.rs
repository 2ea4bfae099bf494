use std::ffi::{CStr, CString};
use std::ptr;

use rqpd_ffi::*;

fn matrix(rows: usize, cols: usize, re: &[f64]) -> *mut RqpdMatrix {
    let data: Vec<f64> = re.iter().flat_map(|&x| [x, 0.0]).collect();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { rqpd_matrix_new(rows, cols, data.as_ptr(), &mut m) }, RqpdStatus::Ok);
    m
}

fn program(src: &str) -> *mut RqpdProgram {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { rqpd_program_parse(src.as_ptr(), &mut p) }, RqpdStatus::Ok);
    p
}

#[test]
fn runs_a_program() {
    let p = program("var q : 2; if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi");
    let rho = matrix(2, 2, &[5.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(rqpd_program_input_dim(p), 2);
        assert_eq!(rqpd_run(p, rho, &mut out), RqpdStatus::Ok);
        assert_eq!((rqpd_matrix_rows(out), rqpd_matrix_cols(out)), (2, 2));
        let mut buf = [0.0; 8];
        assert_eq!(rqpd_matrix_read(out, buf.as_mut_ptr(), 8), RqpdStatus::Ok);
        let want = [1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        for k in 0..4 {
            assert!((buf[2 * k] - want[k]).abs() < 1e-10);
            assert!(buf[2 * k + 1].abs() < 1e-10);
        }
        assert_eq!(rqpd_matrix_read(out, buf.as_mut_ptr(), 7), RqpdStatus::Dimension);
        rqpd_matrix_free(out);
        rqpd_matrix_free(rho);
        rqpd_program_free(p);
    }
}

#[test]
fn reports_errors() {
    let bad = CString::new("var q : 2; q := W[q]").unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(rqpd_program_parse(bad.as_ptr(), &mut p), RqpdStatus::Parse);
        assert!(p.is_null());
        let msg = CStr::from_ptr(rqpd_last_error()).to_str().unwrap();
        assert!(!msg.is_empty());
        assert_eq!(rqpd_program_parse(ptr::null(), &mut p), RqpdStatus::NullPointer);
        let mut out = ptr::null_mut();
        assert_eq!(rqpd_run(ptr::null(), ptr::null(), &mut out), RqpdStatus::NullPointer);
        let mut m = ptr::null_mut();
        assert_eq!(rqpd_matrix_new(2, 3, [0.0; 12].as_ptr(), &mut m), RqpdStatus::Ok);
        let q = program("var q : 2; skip");
        assert_eq!(rqpd_run(q, m, &mut out), RqpdStatus::Dimension);
        rqpd_matrix_free(m);
        rqpd_program_free(q);
        rqpd_program_free(ptr::null_mut());
    }
}

#[test]
fn checks_a_judgment_and_a_coupling() {
    let p = program("var q : 2; q := X[q]");
    let id = matrix(4, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let half = matrix(2, 2, &[0.5, 0.0, 0.0, 0.5]);
    let mut verdict = RqpdVerdict::Inconclusive;
    let mut margin = f64::NAN;
    let mut value = 0.0;
    unsafe {
        assert_eq!(rqpd_check_judgment(p, p, id, id, 20, 1, &mut verdict, &mut margin), RqpdStatus::Ok);
        assert_eq!(verdict, RqpdVerdict::Passed);
        assert!(margin > -1e-6);
        assert_eq!(rqpd_coupling_value(half, half, id, false, &mut value), RqpdStatus::Ok);
        assert!((value - 1.0).abs() < 1e-5);
        rqpd_matrix_free(half);
        rqpd_matrix_free(id);
        rqpd_program_free(p);
    }
}

#[test]
fn runs_a_scenario() {
    let id = CString::new("projective-separation").unwrap();
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(rqpd_casebook_run(id.as_ptr(), 0, &mut json), RqpdStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        rqpd_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["status"], "passed");
        let unknown = CString::new("nope").unwrap();
        assert_ne!(rqpd_casebook_run(unknown.as_ptr(), 0, &mut json), RqpdStatus::Ok);
    }
}
