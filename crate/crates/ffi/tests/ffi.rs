use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use bold_ffi::*;

fn fig1() -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs/fig1.json");
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bold_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn fig1_round_trip() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(bold_scenario_from_json(fig1().as_ptr(), &mut s), BoldStatus::Ok);
        let mut bound = 0;
        assert_eq!(bold_scenario_round_bound(s, &mut bound), BoldStatus::Ok);
        assert_eq!(bound, 127);
        let mut r = ptr::null_mut();
        assert_eq!(bold_run(s, &mut r), BoldStatus::Ok);
        let mut sum = BoldSummary::default();
        assert_eq!(bold_report_summary(r, &mut sum), BoldStatus::Ok);
        assert_eq!(sum.winner, BoldWinner::Honest as u32);
        assert!(sum.liveness_ok);
        assert!(sum.winning_round <= bound);
        let json = CStr::from_ptr(bold_report_json(r)).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(json).unwrap();
        assert_eq!(v["name"], "fig1");
        bold_report_free(r);
        bold_scenario_free(s);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut s = ptr::null_mut();
        let bad = CString::new(r#"{"ks":[2],"delta":"x"}"#).unwrap();
        assert_eq!(bold_scenario_from_json(bad.as_ptr(), &mut s), BoldStatus::MalformedConfig);
        assert!(last_error().contains("delta"), "{}", last_error());
        assert!(s.is_null());

        assert_eq!(bold_scenario_from_json(ptr::null(), &mut s), BoldStatus::NullPointer);
        let mut out = 0;
        assert_eq!(bold_scenario_round_bound(ptr::null(), &mut out), BoldStatus::NullPointer);
        assert!(bold_report_json(ptr::null()).is_null());

        let bytes = [b'{', 0xff, b'}', 0];
        assert_eq!(bold_scenario_from_json(bytes.as_ptr().cast(), &mut s), BoldStatus::InvalidUtf8);

        // Success clears the message.
        assert_eq!(bold_scenario_from_json(fig1().as_ptr(), &mut s), BoldStatus::Ok);
        assert_eq!(last_error(), "");
        bold_scenario_free(s);
        bold_scenario_free(ptr::null_mut());
        bold_report_free(ptr::null_mut());
    }
}

#[test]
fn raw_round_bound_matches_the_worked_values() {
    unsafe {
        let ks = [5u32];
        let mut out = 0;
        // T=100, C=20, δ=1, k=5.
        assert_eq!(bold_round_bound(ks.as_ptr(), 1, 100, 1, 20, false, &mut out), BoldStatus::Ok);
        assert_eq!(out, 134);
        assert_eq!(bold_round_bound(ks.as_ptr(), 1, 100, 1, 20, true, &mut out), BoldStatus::Ok);
        assert_eq!(out, 146);
        assert_eq!(bold_round_bound(ks.as_ptr(), 0, 100, 1, 20, true, &mut out), BoldStatus::InvalidArgument);
        assert_eq!(bold_round_bound(ks.as_ptr(), 1, 0, 1, 20, true, &mut out), BoldStatus::InvalidArgument);
    }
}

#[test]
fn static_run_seed_and_schedule_checks() {
    unsafe {
        let text = CString::new(r#"{"ks":[5],"adversary":{"strategy":"root_spammer","n_a":2},"stakes":{"kind":"fixed","per_level":[415]}}"#).unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(bold_scenario_from_json(text.as_ptr(), &mut s), BoldStatus::Ok);
        let mut pass = false;
        assert_eq!(bold_scenario_validate_schedule(s, 10, &mut pass), BoldStatus::Ok);
        assert!(pass);
        assert_eq!(bold_scenario_validate_schedule(s, 11, &mut pass), BoldStatus::Ok);
        assert!(!pass);
        assert_eq!(bold_scenario_validate_schedule(s, 0, &mut pass), BoldStatus::InvalidArgument);
        assert_eq!(bold_scenario_set_seed(s, 42), BoldStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(bold_run_static(s, &mut r), BoldStatus::Ok);
        let mut sum = BoldSummary::default();
        bold_report_summary(r, &mut sum);
        assert_ne!(sum.winner, BoldWinner::Adversary as u32);
        let json = CStr::from_ptr(bold_report_json(r)).to_str().unwrap();
        assert!(json.contains("\"seed\": 42"));
        bold_report_free(r);
        bold_scenario_free(s);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(bold_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_exported_functions() {
    let h = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bold_arena.h")).unwrap();
    for f in [
        "bold_last_error",
        "bold_version",
        "bold_scenario_from_json",
        "bold_scenario_free",
        "bold_scenario_set_seed",
        "bold_scenario_round_bound",
        "bold_scenario_validate_schedule",
        "bold_round_bound",
        "bold_run",
        "bold_run_static",
        "bold_report_summary",
        "bold_report_json",
        "bold_report_free",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler on PATH; C link check not run");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libbold_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("bold_smoke");
    let st = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe).arg(manifest.join("../core/configs/fig1.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bound=127 winner=1"), "{text}");
    assert!(text.contains("live=1 json=1"), "{text}");
    assert!(text.contains("bad=3 err=") && text.contains("oops"), "{text}");
}
