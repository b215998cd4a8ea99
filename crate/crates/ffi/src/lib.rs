//! C ABI over the arena. Every call returns a [`BoldStatus`]; on failure
//! the message is available from [`bold_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bold_core::accounting::validate_schedule;
use bold_core::arena::{self, ScenarioReport, WinnerKind};
use bold_core::config::ScenarioConfig;
use bold_core::graph::LevelConfig;
use bold_core::timers::bound_for;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoldStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad JSON or a config that fails validation.
    MalformedConfig = 3,
    InvalidArgument = 4,
    /// A panic was caught at the boundary.
    Internal = 5,
}

/// Winner of a finished run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoldWinner {
    Undecided = 0,
    Honest = 1,
    Adversary = 2,
    NoWinner = 3,
}

/// Headline numbers of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BoldSummary {
    pub winner: u32,
    pub liveness_ok: bool,
    /// Zero when no root was confirmed.
    pub winning_round: u64,
    pub round_bound: u64,
    pub rounds_run: u64,
    pub censored_rounds: u64,
    pub violations: u64,
    pub g_h: u64,
    pub s_h: u64,
    pub g_a: u64,
    pub s_a: u64,
    pub ratio_num: u64,
    /// Zero means the ratio is unbounded.
    pub ratio_den: u64,
    pub reimbursed: bool,
}

/// A parsed, validated scenario.
pub struct BoldScenario {
    config: ScenarioConfig,
}

/// A finished run.
pub struct BoldReport {
    report: ScenarioReport,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn guard(f: impl FnOnce() -> Result<(), (BoldStatus, String)>) -> BoldStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BoldStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BoldStatus::Internal
        }
    }
}

fn core_err(e: bold_core::Error) -> (BoldStatus, String) {
    let status = match e {
        bold_core::Error::InvalidArgument(_) => BoldStatus::InvalidArgument,
        _ => BoldStatus::MalformedConfig,
    };
    (status, e.to_string())
}

fn null(what: &str) -> (BoldStatus, String) {
    (BoldStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn bold_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bold_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scenario from NUL-terminated JSON.
///
/// # Safety
/// `json` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bold_scenario_from_json(json: *const c_char, out: *mut *mut BoldScenario) -> BoldStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (BoldStatus::InvalidUtf8, e.to_string()))?;
        let config = ScenarioConfig::from_json(text).map_err(core_err)?;
        config.validate().map_err(core_err)?;
        *out = Box::into_raw(Box::new(BoldScenario { config }));
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `s` must come from [`bold_scenario_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bold_scenario_free(s: *mut BoldScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Replaces the scenario's seed.
///
/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn bold_scenario_set_seed(s: *mut BoldScenario, seed: u64) -> BoldStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("scenario"))?;
        s.config.seed = seed;
        Ok(())
    })
}

/// Round by which the honest root must win, with the update phase.
///
/// # Safety
/// `s` must be a live scenario handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bold_scenario_round_bound(s: *const BoldScenario, out: *mut u64) -> BoldStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = s.config.round_bound().map_err(core_err)?;
        Ok(())
    })
}

/// Checks the scenario's gas and stake schedule against ratio target `rho`.
///
/// # Safety
/// `s` must be a live scenario handle and `pass` writable.
#[no_mangle]
pub unsafe extern "C" fn bold_scenario_validate_schedule(s: *const BoldScenario, rho: u64, pass: *mut bool) -> BoldStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let pass = pass.as_mut().ok_or_else(|| null("pass"))?;
        let c = &s.config;
        let levels = c.levels().map_err(core_err)?;
        let check = validate_schedule(&c.gas, &c.stakes().map_err(core_err)?, &levels, rho).map_err(core_err)?;
        *pass = check.pass;
        Ok(())
    })
}

/// Round bound for raw parameters: `ks` holds `len` cumulative level
/// exponents.
///
/// # Safety
/// `ks` must point at `len` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn bold_round_bound(
    ks: *const u32,
    len: usize,
    threshold: u64,
    delta: u64,
    c_max: u64,
    with_updates: bool,
    out: *mut u64,
) -> BoldStatus {
    guard(|| {
        if ks.is_null() {
            return Err(null("ks"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ks = std::slice::from_raw_parts(ks, len).to_vec();
        let cfg = LevelConfig::new(ks).map_err(|e| (BoldStatus::InvalidArgument, e.to_string()))?;
        if threshold == 0 {
            return Err((BoldStatus::InvalidArgument, "threshold must be positive".into()));
        }
        *out = bound_for(&cfg, threshold, delta, c_max, with_updates);
        Ok(())
    })
}

fn finish(report: ScenarioReport, out: *mut *mut BoldReport) -> Result<(), (BoldStatus, String)> {
    let json = CString::new(report.to_json()).map_err(|e| (BoldStatus::Internal, e.to_string()))?;
    // SAFETY: callers checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(BoldReport { report, json })) };
    Ok(())
}

/// Plays the scenario until a winner or the round cap.
///
/// # Safety
/// `s` must be a live scenario handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bold_run(s: *const BoldScenario, out: *mut *mut BoldReport) -> BoldStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        finish(arena::run(&s.config).map_err(core_err)?, out)
    })
}

/// Plays exactly the static bound with the static honest strategy.
///
/// # Safety
/// `s` must be a live scenario handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bold_run_static(s: *const BoldScenario, out: *mut *mut BoldReport) -> BoldStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        finish(arena::run_static(&s.config).map_err(core_err)?, out)
    })
}

/// Fills `out` with the report's headline numbers.
///
/// # Safety
/// `r` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bold_report_summary(r: *const BoldReport, out: *mut BoldSummary) -> BoldStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("report"))?.report;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let winner = match r.winner {
            WinnerKind::Undecided => BoldWinner::Undecided,
            WinnerKind::Honest => BoldWinner::Honest,
            WinnerKind::Adversary => BoldWinner::Adversary,
            WinnerKind::None => BoldWinner::NoWinner,
        };
        *out = BoldSummary {
            winner: winner as u32,
            liveness_ok: r.liveness_ok(),
            winning_round: r.winning_round.unwrap_or(0),
            round_bound: r.round_bound,
            rounds_run: r.rounds_run,
            censored_rounds: r.censored_rounds,
            violations: r.violations,
            g_h: r.costs.g_h,
            s_h: r.costs.s_h,
            g_a: r.costs.g_a,
            s_a: r.costs.s_a,
            ratio_num: r.costs.ratio.num,
            ratio_den: r.costs.ratio.den,
            reimbursed: r.ledger.complete,
        };
        Ok(())
    })
}

/// The full report as JSON, owned by the handle.
///
/// # Safety
/// `r` must be a live report handle. The string dies with it.
#[no_mangle]
pub unsafe extern "C" fn bold_report_json(r: *const BoldReport) -> *const c_char {
    match r.as_ref() {
        Some(r) => r.json.as_ptr(),
        None => {
            set_error("report is null");
            ptr::null()
        }
    }
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `r` must come from [`bold_run`] or [`bold_run_static`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bold_report_free(r: *mut BoldReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
