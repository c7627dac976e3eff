//! C ABI over the `tcrisk` solver.
//!
//! Scenarios and solutions are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`TcStatus`]; on failure the message is available from
//! [`tc_last_error_message`] until the next failing call on the same thread.
//! Strings returned through `char **` out-parameters are released with
//! [`tc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tcrisk::policy::AugmentedPolicy;
use tcrisk::report::{self, ReportError, RunOptions};
use tcrisk::{Scenario, Solution, StateId};

/// Result code of every fallible call. Values 2 and 3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    Failed = 1,
    InvalidInput = 2,
    Infeasible = 3,
    NullPointer = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// Report rendering.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcFormat {
    Text = 0,
    Json = 1,
}

/// Report kind, mirroring the CLI subcommands that take a scenario.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcCommand {
    Solve = 0,
    Audit = 1,
    Oracle = 2,
    Rollout = 3,
}

/// Parsed, validated scenario.
pub struct TcScenario {
    inner: Scenario,
}

/// Solved value tables together with the feedback policy.
pub struct TcSolution {
    inner: Solution,
    policy: AugmentedPolicy,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: TcStatus, msg: impl Into<String>) -> TcStatus {
    set_error(msg);
    status
}

fn from_report(e: ReportError) -> TcStatus {
    let status = match e.exit_code() {
        2 => TcStatus::InvalidInput,
        3 => TcStatus::Infeasible,
        _ => TcStatus::Failed,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> TcStatus) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(TcStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, TcStatus> {
    if p.is_null() {
        return Err(fail(TcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TcStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

fn give_string(s: String, out: *mut *mut c_char) -> TcStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            TcStatus::Ok
        }
        Err(_) => fail(TcStatus::Failed, "string contains an interior NUL"),
    }
}

macro_rules! check_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(TcStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message of the last failing call on this thread, or NULL. The pointer stays
/// valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_from_json(json: *const c_char, out: *mut *mut TcScenario) -> TcStatus {
    check_null!(out);
    guard(|| {
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Scenario::from_json_str(text, "scenario") {
            Ok(sc) => {
                *out = Box::into_raw(Box::new(TcScenario { inner: sc }));
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Load a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_load(path: *const c_char, out: *mut *mut TcScenario) -> TcStatus {
    check_null!(out);
    guard(|| {
        let p = match str_arg(path, "path") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Scenario::load(Path::new(p)) {
            Ok(sc) => {
                *out = Box::into_raw(Box::new(TcScenario { inner: sc }));
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Release a scenario. NULL is ignored.
///
/// # Safety
/// `sc` must come from `tc_scenario_*` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_free(sc: *mut TcScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Default threshold stored in the scenario.
///
/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_r0(sc: *const TcScenario) -> f64 {
    sc.as_ref().map_or(f64::NAN, |s| s.inner.r0)
}

/// Number of decision stages.
///
/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_horizon(sc: *const TcScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.inner.mdp.horizon())
}

/// Number of states.
///
/// # Safety
/// `sc` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_num_states(sc: *const TcScenario) -> usize {
    sc.as_ref().map_or(0, |s| s.inner.mdp.num_states())
}

/// Index of the state with the given label.
///
/// # Safety
/// `sc` must be a live scenario handle, `label` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_scenario_state_index(
    sc: *const TcScenario,
    label: *const c_char,
    out: *mut usize,
) -> TcStatus {
    check_null!(sc, out);
    guard(|| {
        let l = match str_arg(label, "label") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match (*sc).inner.mdp.state_id(l) {
            Ok(x) => {
                *out = x.0;
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::OutOfRange, e.to_string()),
        }
    })
}

/// Solve from the initial state at threshold `r0`. Pass NaN to use the
/// scenario's own threshold.
///
/// # Safety
/// `sc` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_solve(sc: *const TcScenario, r0: f64, out: *mut *mut TcSolution) -> TcStatus {
    check_null!(sc, out);
    guard(|| {
        let s = &(*sc).inner;
        let r0 = if r0.is_nan() { s.r0 } else { r0 };
        match tcrisk::solve(&s.mdp, &s.risk, r0) {
            Ok(sol) => {
                let policy = AugmentedPolicy::from_solution(&sol);
                *out = Box::into_raw(Box::new(TcSolution { inner: sol, policy }));
                TcStatus::Ok
            }
            Err(e) => from_report(e.into()),
        }
    })
}

/// Release a solution. NULL is ignored.
///
/// # Safety
/// `sol` must come from `tc_solve` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tc_solution_free(sol: *mut TcSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Optimal expected objective cost at the solved threshold.
///
/// # Safety
/// `sol` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn tc_solution_value(sol: *const TcSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.inner.value)
}

/// Smallest feasible threshold at `(stage, state)`. NaN when out of range.
///
/// # Safety
/// `sol` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn tc_solution_min_threshold(sol: *const TcSolution, stage: usize, state: usize) -> f64 {
    match sol.as_ref() {
        Some(s) if stage <= s.inner.mdp.horizon() && state < s.inner.mdp.num_states() => {
            s.inner.bounds.lower(stage, StateId(state))
        }
        _ => f64::NAN,
    }
}

/// Value of the threshold-indexed value function at `(stage, state, r)`;
/// +infinity when `r` is infeasible.
///
/// # Safety
/// `sol` must be a live solution handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_solution_value_at(
    sol: *const TcSolution,
    stage: usize,
    state: usize,
    r: f64,
    out: *mut f64,
) -> TcStatus {
    check_null!(sol, out);
    guard(|| {
        let s = &(*sol).inner;
        if stage > s.mdp.horizon() || state >= s.mdp.num_states() {
            return fail(TcStatus::OutOfRange, format!("no value function at stage {stage}, state {state}"));
        }
        *out = s.value_function(stage, StateId(state)).value_at(r);
        TcStatus::Ok
    })
}

/// Action label chosen at `(stage, state, r)`. When `successor_thresholds` is
/// not NULL it receives the threshold handed to each state index (NaN for
/// states that cannot follow); it must hold `tc_scenario_num_states` entries.
///
/// # Safety
/// `sol` must be a live solution handle, `action` a valid pointer and
/// `successor_thresholds` NULL or an array of the stated length.
#[no_mangle]
pub unsafe extern "C" fn tc_solution_decide(
    sol: *const TcSolution,
    stage: usize,
    state: usize,
    r: f64,
    action: *mut *mut c_char,
    successor_thresholds: *mut f64,
) -> TcStatus {
    check_null!(sol, action);
    guard(|| {
        let s = &*sol;
        if state >= s.inner.mdp.num_states() {
            return fail(TcStatus::OutOfRange, format!("no state with index {state}"));
        }
        let d = match s.policy.decide(stage, StateId(state), r) {
            Ok(d) => d,
            Err(e) => {
                let status = match e {
                    tcrisk::policy::PolicyError::NoDecisionAtStage(_) => TcStatus::OutOfRange,
                    tcrisk::policy::PolicyError::InfeasibleThreshold { .. } => TcStatus::Infeasible,
                    _ => TcStatus::Failed,
                };
                return fail(status, e.to_string());
            }
        };
        if !successor_thresholds.is_null() {
            let n = s.inner.mdp.num_states();
            let buf = std::slice::from_raw_parts_mut(successor_thresholds, n);
            buf.fill(f64::NAN);
            for (y, t) in &d.successor_thresholds {
                buf[y.0] = *t;
            }
        }
        give_string(s.inner.mdp.action_label(d.action).to_string(), action)
    })
}

/// Build a full report, as the CLI would print it. `r0` NaN keeps the
/// scenario's threshold; `n` and `seed` only affect rollouts.
///
/// # Safety
/// `sc` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_report(
    sc: *const TcScenario,
    command: TcCommand,
    format: TcFormat,
    r0: f64,
    oracle: bool,
    n: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> TcStatus {
    check_null!(sc, out);
    guard(|| {
        let s = &(*sc).inner;
        let opts = RunOptions {
            r0: (!r0.is_nan()).then_some(r0),
            oracle,
            audit_all_breakpoints: false,
        };
        let rep = match command {
            TcCommand::Solve => report::solve_report(s, &opts),
            TcCommand::Audit => report::audit_report(s, &opts),
            TcCommand::Oracle => report::oracle_report(s, &opts),
            TcCommand::Rollout => report::rollout_report(s, &opts, n, seed),
        };
        match rep {
            Ok(r) => give_string(
                match format {
                    TcFormat::Text => r.to_text(),
                    TcFormat::Json => r.to_json_string(),
                },
                out,
            ),
            Err(e) => from_report(e),
        }
    })
}
