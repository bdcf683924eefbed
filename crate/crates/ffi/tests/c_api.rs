use std::ffi::{CStr, CString};
use std::ptr;

use nlcl_ffi::*;

const HOMOGENEOUS: &str = "scenario = \"blowup_homogeneous\"\n";
const ADVECTION: &str = "scenario = \"custom\"\n[grid]\nnx = 32\nny = 32\n[solver]\nt_end = 0.1\n";

fn new_sim(text: &str) -> *mut NlclSimulation {
    let c = CString::new(text).unwrap();
    let mut sim = ptr::null_mut();
    let status = unsafe { nlcl_simulation_new(c.as_ptr(), &mut sim) };
    assert_eq!(status, NlclStatus::Ok, "{}", last_error());
    assert!(!sim.is_null());
    sim
}

fn last_error() -> String {
    let p = nlcl_last_error_message();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

#[test]
fn bad_config_reports_config_status() {
    let c = CString::new("scenario = \"laser\"\n[grid]\nnx = -3\n").unwrap();
    let mut sim = ptr::null_mut();
    let status = unsafe { nlcl_simulation_new(c.as_ptr(), &mut sim) };
    assert_eq!(status, NlclStatus::Config);
    assert!(sim.is_null());
    assert!(!last_error().is_empty());

    let c = CString::new("bogus_key = 1\n").unwrap();
    let status = unsafe { nlcl_simulation_new(c.as_ptr(), &mut sim) };
    assert_eq!(status, NlclStatus::Config);
    assert!(last_error().contains("bogus_key"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { nlcl_simulation_new(ptr::null(), &mut sim) },
        NlclStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { nlcl_simulation_step(ptr::null_mut(), ptr::null_mut()) },
        NlclStatus::InvalidArgument
    );
    let mut t = 0.0;
    assert_eq!(
        unsafe { nlcl_simulation_time(ptr::null(), &mut t) },
        NlclStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { nlcl_oracle_deviation(16, 1, ptr::null_mut()) },
        NlclStatus::InvalidArgument
    );
    unsafe { nlcl_simulation_free(ptr::null_mut()) };
}

#[test]
fn dims_copy_and_integrate() {
    let sim = new_sim(ADVECTION);
    let (mut nx, mut ny, mut nc) = (0usize, 0usize, 0usize);
    assert_eq!(
        unsafe { nlcl_simulation_dims(sim, &mut nx, &mut ny, &mut nc) },
        NlclStatus::Ok
    );
    assert_eq!((nx, ny, nc), (32, 32, 1));

    let mut buf = vec![0.0; nx * ny];
    let mut short = vec![0.0; 10];
    assert_eq!(
        unsafe { nlcl_simulation_copy_component(sim, 0, short.as_mut_ptr(), short.len()) },
        NlclStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { nlcl_simulation_copy_component(sim, 1, buf.as_mut_ptr(), buf.len()) },
        NlclStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { nlcl_simulation_copy_component(sim, 0, buf.as_mut_ptr(), buf.len()) },
        NlclStatus::Ok
    );
    let cell = 1.0 / (32.0 * 32.0);
    let sum: f64 = buf.iter().sum::<f64>() * cell;
    let mut mass = 0.0;
    assert_eq!(
        unsafe { nlcl_simulation_integrate(sim, 0, &mut mass) },
        NlclStatus::Ok
    );
    assert!((sum - mass).abs() < 1e-12);

    assert_eq!(unsafe { nlcl_simulation_run(sim, 0.1) }, NlclStatus::Ok);
    let mut t = 0.0;
    unsafe { nlcl_simulation_time(sim, &mut t) };
    assert!((t - 0.1).abs() < 1e-12);
    let mut after = 0.0;
    unsafe { nlcl_simulation_integrate(sim, 0, &mut after) };
    assert!((after - mass).abs() < 1e-12 * mass.abs().max(1.0));
    unsafe { nlcl_simulation_free(sim) };
}

#[test]
fn step_reports_fixed_dt() {
    let sim = new_sim(HOMOGENEOUS);
    let mut dt = 0.0;
    assert_eq!(
        unsafe { nlcl_simulation_step(sim, &mut dt) },
        NlclStatus::Ok
    );
    assert!((dt - 1e-3).abs() < 1e-15);
    unsafe { nlcl_simulation_free(sim) };
}

#[test]
fn blowup_is_sticky() {
    let sim = new_sim(HOMOGENEOUS);
    let status = unsafe { nlcl_simulation_run(sim, 2.0) };
    assert_eq!(status, NlclStatus::Blowup);
    let mut t = 0.0;
    unsafe { nlcl_simulation_time(sim, &mut t) };
    assert!(t > 0.9 && t < 1.05, "halted at {t}");
    let mut dt = 1.0;
    assert_eq!(
        unsafe { nlcl_simulation_step(sim, &mut dt) },
        NlclStatus::Blowup
    );
    assert_eq!(dt, 0.0);
    unsafe { nlcl_simulation_free(sim) };
}

#[test]
fn oracle_through_the_boundary() {
    let mut dev = f64::NAN;
    assert_eq!(
        unsafe { nlcl_oracle_deviation(32, 7, &mut dev) },
        NlclStatus::Ok
    );
    assert!(dev < 1e-10, "{dev}");
}
