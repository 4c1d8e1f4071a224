use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hbc_ffi::*;

fn default_caps(c_c: f64) -> HbcCapacitances {
    HbcCapacitances {
        c_x_tx: 0.5e-12,
        c_x_rx: 0.5e-12,
        c_gb_rx: 3e-12,
        c_l: 10e-12,
        c_b: 150.838e-12,
        c_c,
    }
}

fn last_error() -> String {
    let p = hbc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn transfer_functions() {
    let caps = default_caps(0.0);
    let mut v = 0.0;
    unsafe {
        assert_eq!(hbc_full_transfer(&caps, &mut v), HbcStatus::Ok);
        assert!((v / 1.2198e-4 - 1.0).abs() < 1e-4);
        assert_eq!(hbc_rx_transfer_distant(&caps, &mut v), HbcStatus::Ok);
        assert!((v / 1.2749e-4 - 1.0).abs() < 1e-4);
        let mut s = 0.0;
        assert_eq!(hbc_simplified_transfer(&caps, &mut s), HbcStatus::Ok);
        assert_eq!(s, v);
        let (mut re, mut im) = (0.0, 1.0);
        assert_eq!(hbc_oracle_transfer(&caps, 1e5, &mut re, &mut im), HbcStatus::Ok);
        assert!((re / 1.2198e-4 - 1.0).abs() < 1e-4);
        assert!(im.abs() < 1e-12 * re);
    }
    assert!(hbc_last_error_message().is_null());
}

#[test]
fn scenario_from_capacitances() {
    let caps = default_caps(60e-15);
    let mut handle: *mut HbcScenario = ptr::null_mut();
    let mut report = std::mem::MaybeUninit::<HbcReport>::uninit();
    unsafe {
        assert_eq!(hbc_scenario_from_capacitances(&caps, 0.0, &mut handle), HbcStatus::Ok);
        assert_eq!(hbc_scenario_report(handle, report.as_mut_ptr()), HbcStatus::Ok);
        let mut back = default_caps(0.0);
        assert_eq!(hbc_scenario_capacitances(handle, &mut back), HbcStatus::Ok);
        assert_eq!(back, caps);
        hbc_scenario_free(handle);
        let r = report.assume_init();
        assert!(r.coupled && !r.distant);
        assert!(!r.has_geometric && r.geometric.is_nan());
        assert_eq!(r.frequency_hz, 1e6);
        assert!((r.full - 4.5468e-3).abs() < 1e-6);
    }
}

#[test]
fn scenario_from_config_text() {
    let text = CString::new(std::fs::read_to_string(configs().join("sample.conf")).unwrap()).unwrap();
    let dir = CString::new(configs().to_str().unwrap()).unwrap();
    let mut handle: *mut HbcScenario = ptr::null_mut();
    let mut report = std::mem::MaybeUninit::<HbcReport>::uninit();
    unsafe {
        assert_eq!(hbc_scenario_from_config(text.as_ptr(), dir.as_ptr(), &mut handle), HbcStatus::Ok);
        assert_eq!(hbc_scenario_report(handle, report.as_mut_ptr()), HbcStatus::Ok);
        hbc_scenario_free(handle);
        let r = report.assume_init();
        assert!(r.has_geometric_distant);
        assert!((r.geometric_distant / 4.750e-4 - 1.0).abs() < 1e-4);

        // without a base directory the table cannot be found
        let status = hbc_scenario_from_config(text.as_ptr(), ptr::null(), &mut handle);
        assert!(matches!(status, HbcStatus::Io), "{status:?}");
        assert!(last_error().contains("dielectric_sample.csv"));
    }
}

#[test]
fn config_errors_are_reported() {
    let text = CString::new("[rx]\nc_x_f = 1e-12\n").unwrap();
    let mut handle: *mut HbcScenario = ptr::null_mut();
    unsafe {
        assert_eq!(hbc_scenario_from_config(text.as_ptr(), ptr::null(), &mut handle), HbcStatus::Config);
    }
    assert!(handle.is_null());
    assert!(last_error().contains("missing parameter"));
}

#[test]
fn null_pointers_rejected() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(hbc_full_transfer(ptr::null(), &mut v), HbcStatus::NullPointer);
        assert!(last_error().contains("caps"));
        assert_eq!(hbc_full_transfer(&default_caps(0.0), ptr::null_mut()), HbcStatus::NullPointer);
        assert_eq!(hbc_scenario_report(ptr::null(), ptr::null_mut()), HbcStatus::NullPointer);
        hbc_scenario_free(ptr::null_mut());
    }
}

#[test]
fn domain_errors_map_to_status() {
    let mut v = 0.0;
    let mut caps = default_caps(0.0);
    caps.c_b = -1e-12;
    unsafe {
        assert_eq!(hbc_full_transfer(&caps, &mut v), HbcStatus::Domain);
        assert_eq!(hbc_ratio_to_db(0.0, &mut v), HbcStatus::Domain);
        assert_eq!(hbc_oracle_transfer(&default_caps(0.0), -1.0, &mut v, &mut v), HbcStatus::Domain);
    }
}

#[test]
fn geometry_calls() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(hbc_return_path_capacitance(0.03, 0.005, 0.0, 0.5, &mut v), HbcStatus::Ok);
        assert!((v - 1.0625e-12).abs() < 1e-15);
        assert_eq!(hbc_plate_to_plate_capacitance(0.03, 0.005, &mut v), HbcStatus::Ok);
        assert!((v - 5.007e-12).abs() < 1e-15);
        let mut k = 0.0;
        assert_eq!(hbc_calibrate_coupling_constant(60e-15, 0.1, 30e-4, &mut k), HbcStatus::Ok);
        assert!((k - 2e-12).abs() < 1e-24);
        assert_eq!(hbc_coupling_capacitance(0.03, 0.1, k, &mut v), HbcStatus::Ok);
        assert!((v - 56.549e-15).abs() < 1e-18);
        assert_eq!(hbc_ratio_to_db(0.1, &mut v), HbcStatus::Ok);
        assert!((v + 20.0).abs() < 1e-12);
        assert_eq!(hbc_return_path_capacitance(0.03, 0.005, 0.0, 1.5, &mut v), HbcStatus::Domain);
    }
}

#[test]
fn resonance_calls() {
    let mut ex = HbcExtraction { resonant_frequency_hz: 0.0, capacitance_f: 0.0, eqs: false };
    unsafe {
        assert_eq!(hbc_simulate_extraction(1e-3, 150.838e-12, 10.0, 1e4, 1e6, 2000, &mut ex), HbcStatus::Ok);
    }
    assert!((ex.capacitance_f / 150.838e-12 - 1.0).abs() < 1e-3);
    assert!(ex.eqs);

    let f: Vec<f64> = (0..50).map(|i| 1e5 + 1e4 * i as f64).collect();
    let rising: Vec<f64> = f.iter().map(|x| x * 1e-6).collect();
    unsafe {
        let status = hbc_capacitance_from_sweep(f.as_ptr(), rising.as_ptr(), f.len(), 1e-3, &mut ex);
        assert_eq!(status, HbcStatus::Peak);
        let status = hbc_capacitance_from_sweep(ptr::null(), rising.as_ptr(), f.len(), 1e-3, &mut ex);
        assert_eq!(status, HbcStatus::NullPointer);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(hbc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hbc.h")).unwrap();
    for name in [
        "hbc_last_error_message",
        "hbc_version",
        "hbc_scenario_from_capacitances",
        "hbc_scenario_from_config",
        "hbc_scenario_free",
        "hbc_scenario_capacitances",
        "hbc_scenario_report",
        "hbc_full_transfer",
        "hbc_simplified_transfer",
        "hbc_rx_transfer_distant",
        "hbc_oracle_transfer",
        "hbc_return_path_capacitance",
        "hbc_plate_to_plate_capacitance",
        "hbc_coupling_capacitance",
        "hbc_calibrate_coupling_constant",
        "hbc_ratio_to_db",
        "hbc_capacitance_from_sweep",
        "hbc_simulate_extraction",
        "typedef struct HbcScenario HbcScenario",
        "HBC_STATUS_PANIC = 9",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles a small C program against the generated header and the static
/// library and runs it.
#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // the test binary lives in <target>/<profile>/deps
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libhbc_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let build = Command::new(cc)
        .arg("-std=c99")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("run C compiler");
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok 0.1.0 1.2197"));
}
