use std::ffi::CStr;
use std::ptr;

use spinsqueeze_ffi::*;

fn last_error() -> Option<String> {
    let p = ssq_last_error_message();
    if p.is_null() {
        None
    } else {
        Some(unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }
}

fn amplitudes(state: *const SsqSpinState) -> (Vec<f64>, Vec<f64>) {
    let dim = unsafe { ssq_spin_state_dim(state) };
    let mut re = vec![0.0; dim];
    let mut im = vec![0.0; dim];
    let status = unsafe { ssq_spin_state_amplitudes(state, re.as_mut_ptr(), im.as_mut_ptr(), dim) };
    assert_eq!(status, SsqStatus::Ok);
    (re, im)
}

#[test]
fn coherent_state_round_trip() {
    let mut cs = ptr::null_mut();
    assert_eq!(unsafe { ssq_coherent_state(4, &mut cs) }, SsqStatus::Ok);
    assert!(last_error().is_none());
    assert_eq!(unsafe { ssq_spin_state_dim(cs) }, 5);
    let (re, im) = amplitudes(cs);
    let expected = [1.0, 2.0, 6f64.sqrt(), 2.0, 1.0].map(|c| c / 4.0);
    for k in 0..5 {
        assert!((re[k] - expected[k]).abs() < 1e-14);
        assert!(im[k].abs() < 1e-14);
    }
    let mut xi = 0.0;
    assert_eq!(unsafe { ssq_squeezing_xi(cs, &mut xi) }, SsqStatus::Ok);
    assert!((xi - 1.0).abs() < 1e-12);
    unsafe { ssq_spin_state_free(cs) };
}

#[test]
fn rotation_of_stretched_state_matches_coherent_state() {
    let mut up = ptr::null_mut();
    let mut rotated = ptr::null_mut();
    let mut cs = ptr::null_mut();
    unsafe {
        assert_eq!(ssq_dicke_state(6, 0, &mut up), SsqStatus::Ok);
        assert_eq!(
            ssq_rotate(up, SsqAxis::Y, std::f64::consts::FRAC_PI_2, &mut rotated),
            SsqStatus::Ok
        );
        assert_eq!(ssq_coherent_state(6, &mut cs), SsqStatus::Ok);
    }
    let (r1, i1) = amplitudes(rotated);
    let (r2, i2) = amplitudes(cs);
    for k in 0..r1.len() {
        assert!((r1[k] - r2[k]).abs() < 1e-12);
        assert!((i1[k] - i2[k]).abs() < 1e-12);
    }
    unsafe {
        ssq_spin_state_free(up);
        ssq_spin_state_free(rotated);
        ssq_spin_state_free(cs);
    }
}

#[test]
fn twisting_squeezes_and_gate_matches() {
    let mut cs = ptr::null_mut();
    let mut twisted = ptr::null_mut();
    let mut gated = ptr::null_mut();
    let (mut chi_t, mut overlap) = (0.0, 0.0);
    unsafe {
        assert_eq!(ssq_coherent_state(6, &mut cs), SsqStatus::Ok);
        assert_eq!(
            ssq_gate_as_squeezer(cs, 0.05, 2, 0, &mut gated, &mut chi_t, &mut overlap),
            SsqStatus::Ok
        );
        assert_eq!(ssq_oat_evolve(cs, chi_t, &mut twisted), SsqStatus::Ok);
    }
    assert!((chi_t + 2.0 * 2.0 * std::f64::consts::PI * 0.05f64.powi(2)).abs() < 1e-12);
    assert!(overlap > 1.0 - 1e-6, "overlap {overlap}");

    let (mut xi_twisted, mut xi_gated) = (0.0, 0.0);
    unsafe {
        assert_eq!(ssq_squeezing_xi(twisted, &mut xi_twisted), SsqStatus::Ok);
        assert_eq!(ssq_squeezing_xi(gated, &mut xi_gated), SsqStatus::Ok);
    }
    assert!(xi_twisted < 1.0);
    assert!((xi_twisted - xi_gated).abs() < 1e-6);
    unsafe {
        ssq_spin_state_free(cs);
        ssq_spin_state_free(twisted);
        ssq_spin_state_free(gated);
    }
}

#[test]
fn phase_coefficient_matches_closed_form() {
    let (mut a, mut analytic) = (0.0, 0.0);
    let status = unsafe { ssq_gate_phase_coefficient(4, 0.05, 1, &mut a, &mut analytic) };
    assert_eq!(status, SsqStatus::Ok);
    assert!(((a - analytic) / analytic).abs() < 1e-4);
}

#[test]
fn squeezing_db_value() {
    let mut db = 0.0;
    assert_eq!(
        unsafe { ssq_squeezing_db(0.4571, 1.0, &mut db) },
        SsqStatus::Ok
    );
    assert!((db + 3.40).abs() < 0.01);
}

#[test]
fn error_codes_and_messages() {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ssq_coherent_state(0, &mut out) },
        SsqStatus::InvalidArgument
    );
    assert!(out.is_null());
    assert!(last_error().unwrap().contains("invalid argument"));

    assert_eq!(
        unsafe { ssq_coherent_state(100_000, &mut out) },
        SsqStatus::Resource
    );
    assert_eq!(
        unsafe { ssq_coherent_state(3, ptr::null_mut()) },
        SsqStatus::NullPointer
    );
    assert!(last_error().unwrap().contains("out"));

    let mut xi = 0.0;
    assert_eq!(
        unsafe { ssq_squeezing_xi(ptr::null(), &mut xi) },
        SsqStatus::NullPointer
    );

    let mut db = 0.0;
    assert_eq!(
        unsafe { ssq_squeezing_db(-1.0, 1.0, &mut db) },
        SsqStatus::InvalidArgument
    );

    let mut dicke = ptr::null_mut();
    assert_eq!(unsafe { ssq_dicke_state(4, 2, &mut dicke) }, SsqStatus::Ok);
    assert!(last_error().is_none());
    assert_eq!(
        unsafe { ssq_squeezing_xi(dicke, &mut xi) },
        SsqStatus::DegenerateDirection
    );

    let mut buf = [0.0; 2];
    let mut buf2 = [0.0; 2];
    assert_eq!(
        unsafe { ssq_spin_state_amplitudes(dicke, buf.as_mut_ptr(), buf2.as_mut_ptr(), 2) },
        SsqStatus::InvalidArgument
    );

    unsafe { ssq_spin_state_free(dicke) };

    let mut top = ptr::null_mut();
    assert_eq!(unsafe { ssq_dicke_state(4, 0, &mut top) }, SsqStatus::Ok);
    let mut gated = ptr::null_mut();
    let (mut chi_t, mut overlap) = (0.0, 0.0);
    assert_eq!(
        unsafe { ssq_gate_as_squeezer(top, 0.5, 1, 2, &mut gated, &mut chi_t, &mut overlap) },
        SsqStatus::CutoffOverflow
    );
    assert!(gated.is_null());
    assert!(last_error().unwrap().contains("n_max"));
    unsafe { ssq_spin_state_free(top) };
    unsafe { ssq_spin_state_free(ptr::null_mut()) };
    assert_eq!(unsafe { ssq_spin_state_dim(ptr::null()) }, 0);
}

#[test]
fn amplitudes_are_normalized_on_input() {
    let re = [3.0, 0.0, 0.0];
    let im = [0.0, 0.0, 4.0];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { ssq_spin_state_from_amplitudes(re.as_ptr(), im.as_ptr(), 3, &mut s) },
        SsqStatus::Ok
    );
    let (r, i) = amplitudes(s);
    assert!((r[0] - 0.6).abs() < 1e-15);
    assert!((i[2] - 0.8).abs() < 1e-15);
    unsafe { ssq_spin_state_free(s) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ssq_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
