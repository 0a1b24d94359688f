use std::ffi::{CStr, CString};
use std::ptr;

use vpcontrol_ffi::*;

fn new_sim(name: &str) -> *mut VpSimulation {
    let name = CString::new(name).unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { vp_simulation_new(name.as_ptr(), &mut sim) }, VpStatus::Ok);
    assert!(!sim.is_null());
    sim
}

fn last_error() -> String {
    let p = vp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn unknown_preset_reports_invalid_argument() {
    let name = CString::new("three-stream").unwrap();
    let mut sim = ptr::null_mut();
    let st = unsafe { vp_simulation_new(name.as_ptr(), &mut sim) };
    assert_eq!(st, VpStatus::InvalidArgument);
    assert!(sim.is_null());
    assert!(last_error().contains("three-stream"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { vp_simulation_new(ptr::null(), &mut sim) }, VpStatus::NullPointer);
    assert_eq!(unsafe { vp_simulation_run(ptr::null_mut()) }, VpStatus::NullPointer);
    assert_eq!(unsafe { vp_simulation_energy_len(ptr::null()) }, 0);
    assert!(unsafe { vp_control_field_eval(ptr::null(), 0.0) }.is_nan());
    unsafe {
        vp_simulation_free(ptr::null_mut());
        vp_control_field_free(ptr::null_mut());
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(vp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn objective_before_run_is_not_run() {
    let sim = new_sim("two-stream");
    let kind = CString::new("ee").unwrap();
    let mut v = 0.0;
    assert_eq!(unsafe { vp_simulation_objective(sim, kind.as_ptr(), &mut v) }, VpStatus::NotRun);
    unsafe { vp_simulation_free(sim) };
}

#[test]
fn bad_configuration_maps_to_status() {
    let sim = new_sim("two-stream");
    let st = unsafe { vp_simulation_configure(sim, 1, 32, 0.1, 1.0, 1e-3) };
    assert_eq!(st, VpStatus::InvalidArgument);
    let st = unsafe { vp_simulation_configure(sim, 32, 32, 0.3, 1.0, 1e-3) };
    assert_eq!(st, VpStatus::InvalidArgument);
    let st = unsafe { vp_simulation_configure(sim, 32, 32, -0.1, 1.0, 1e-3) };
    assert_ne!(st, VpStatus::Ok);
    let a = [f64::NAN];
    let b = [0.0];
    let st = unsafe { vp_simulation_set_control(sim, a.as_ptr(), b.as_ptr(), 1) };
    assert_eq!(st, VpStatus::InvalidArgument);
    unsafe { vp_simulation_free(sim) };
}

#[test]
fn unperturbed_run_has_zero_energy() {
    let sim = new_sim("two-stream");
    assert_eq!(unsafe { vp_simulation_configure(sim, 32, 32, 0.1, 1.0, 0.0) }, VpStatus::Ok);
    assert_eq!(unsafe { vp_simulation_run(sim) }, VpStatus::Ok);
    let n = unsafe { vp_simulation_energy_len(sim) };
    assert_eq!(n, 11);
    let mut buf = vec![f64::NAN; n + 3];
    let mut written = 0;
    let st = unsafe { vp_simulation_energy(sim, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(st, VpStatus::Ok);
    assert_eq!(written, n);
    assert!(buf[..n].iter().all(|&e| e.abs() < 1e-20), "{buf:?}");
    let kind = CString::new("kl").unwrap();
    let mut v = f64::NAN;
    assert_eq!(unsafe { vp_simulation_objective(sim, kind.as_ptr(), &mut v) }, VpStatus::Ok);
    assert!(v.abs() < 1e-12);
    unsafe { vp_simulation_free(sim) };
}

#[test]
fn guess_round_trip_through_handles() {
    let sim = new_sim("two-stream");
    assert_eq!(unsafe { vp_simulation_configure(sim, 32, 32, 0.1, 2.0, 1e-3) }, VpStatus::Ok);
    let mut field = ptr::null_mut();
    let (mut re, mut im) = (0.0, 0.0);
    let st = unsafe { vp_guess(sim, false, &mut field, &mut re, &mut im) };
    assert_eq!(st, VpStatus::Ok, "{}", last_error());
    assert!(re > 0.2 && re < 0.3, "{re}");
    assert!(im.abs() < 1e-6);
    let n = unsafe { vp_control_field_order(field) };
    assert!(n >= 1);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    assert_eq!(
        unsafe { vp_control_field_coefficients(field, a.as_mut_ptr(), b.as_mut_ptr(), n) },
        VpStatus::Ok
    );
    assert!(b.iter().any(|v| *v != 0.0));
    if n > 1 {
        let st = unsafe { vp_control_field_coefficients(field, a.as_mut_ptr(), b.as_mut_ptr(), n - 1) };
        assert_eq!(st, VpStatus::LengthMismatch);
    }
    let h0 = unsafe { vp_control_field_eval(field, 0.0) };
    assert!((h0 - a.iter().sum::<f64>()).abs() < 1e-15);

    assert_eq!(unsafe { vp_simulation_apply_control(sim, field) }, VpStatus::Ok);
    let kind = CString::new("eet").unwrap();
    let mut with_control = f64::NAN;
    assert_eq!(unsafe { vp_simulation_evaluate(sim, kind.as_ptr(), &mut with_control) }, VpStatus::Ok);
    assert!(with_control.is_finite() && with_control >= 0.0);
    unsafe {
        vp_control_field_free(field);
        vp_simulation_free(sim);
    }
}
