use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use chemofront_ffi::*;

const CONFIG: &str = r#"
scenario = "ordering"

[model]
m = 2.0
chi = 1.0

[bump]
k0 = 1.0
r0 = 0.5
d0 = 1.0
mu = 2.0
delta = 0.1

[grid]
cells = 100

[controls]
t_end = 0.01

[sampling]
samples = 10
"#;

fn config() -> *mut CfConfig {
    let text = CString::new(CONFIG).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { cf_config_from_toml(text.as_ptr(), &mut cfg) }, CfStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn last_error() -> String {
    let p = cf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn run_and_query() {
    let cfg = config();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(cf_run(cfg, &mut out), CfStatus::Ok);
        assert_eq!(cf_outcome_verdict(out), CfVerdict::Pass);
        let name = CString::new("mass_drift").unwrap();
        let mut v = f64::NAN;
        assert_eq!(cf_outcome_metric(out, name.as_ptr(), &mut v), CfStatus::Ok);
        assert!(v <= 1e-12);
        let missing = CString::new("nope").unwrap();
        assert_eq!(cf_outcome_metric(out, missing.as_ptr(), &mut v), CfStatus::NotFound);
        assert!(last_error().contains("nope"));
        let (mut total, mut failed) = (0usize, 99usize);
        assert_eq!(cf_outcome_check_counts(out, &mut total, &mut failed), CfStatus::Ok);
        assert!(total > 0);
        assert_eq!(failed, 0);
        let mut json = ptr::null_mut();
        assert_eq!(cf_outcome_report_json(out, &mut json), CfStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        cf_string_free(json);
        assert!(text.contains("\"verdict\": \"pass\""));
        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(cf_outcome_write(out, d.as_ptr()), CfStatus::Ok);
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("trace.csv").exists());
        cf_outcome_free(out);
        cf_config_free(cfg);
    }
}

#[test]
fn overrides_and_bad_input() {
    let cfg = config();
    unsafe {
        let k = CString::new("grid.cells").unwrap();
        let good = CString::new("120").unwrap();
        assert_eq!(cf_config_set(cfg, k.as_ptr(), good.as_ptr()), CfStatus::Ok);
        let bad = CString::new("2").unwrap();
        assert_eq!(cf_config_set(cfg, k.as_ptr(), bad.as_ptr()), CfStatus::Config);
        assert!(!last_error().is_empty());
        cf_config_free(cfg);

        let mut out = ptr::null_mut();
        let broken = CString::new("scenario = 3").unwrap();
        assert_eq!(cf_config_from_toml(broken.as_ptr(), &mut out), CfStatus::Config);
        assert!(out.is_null());
        assert_eq!(cf_config_from_toml(ptr::null(), &mut out), CfStatus::NullPointer);
        let mut o2 = ptr::null_mut();
        assert_eq!(cf_run(ptr::null(), &mut o2), CfStatus::NullPointer);
        assert_eq!(cf_outcome_verdict(ptr::null()), CfVerdict::Error);
        cf_config_free(ptr::null_mut());
        cf_outcome_free(ptr::null_mut());
        cf_string_free(ptr::null_mut());
    }
}

#[test]
fn certify_without_running() {
    let cfg = config();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(cf_certify(cfg, &mut out), CfStatus::Ok);
        let (mut total, mut failed) = (0usize, 0usize);
        assert_eq!(cf_outcome_check_counts(out, &mut total, &mut failed), CfStatus::Ok);
        assert!(total >= 1);
        cf_outcome_free(out);
        cf_config_free(cfg);
    }
}

#[test]
fn predicted_speed_values() {
    for (mu, expect) in [(1.0, 1.5), (4.0, 0.0), (6.0, -1.0)] {
        let mut v = f64::NAN;
        assert_eq!(unsafe { cf_predicted_speed(2.0, 1.0, 1.0, 0.5, mu, &mut v) }, CfStatus::Ok);
        assert!((v - expect).abs() < 1e-12, "{mu}: {v}");
    }
    let mut v = 0.0;
    assert_eq!(unsafe { cf_predicted_speed(0.5, 1.0, 1.0, 0.5, 1.0, &mut v) }, CfStatus::Config);
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/chemofront.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["cf_run", "cf_config_from_toml", "cf_outcome_free", "CF_STATUS_OK", "typedef struct CfOutcome"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!("#include \"{header}\"\nint main(void) {{ CfConfig *c = 0; cf_config_free(c); return CF_STATUS_OK; }}\n"),
    )
    .unwrap();
    let Ok(status) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() else {
        eprintln!("no C compiler available; syntax check skipped");
        return;
    };
    assert!(status.success());
}
