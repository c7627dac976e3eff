use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use tcrisk_ffi::*;

fn scenario(json: &str) -> *mut TcScenario {
    let text = CString::new(json).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { tc_scenario_from_json(text.as_ptr(), &mut sc) }, TcStatus::Ok);
    sc
}

fn last_error() -> String {
    let p = tc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { tc_string_free(s) };
    out
}

#[test]
fn solve_and_query_squander_save() {
    let sc = scenario(tcrisk::fixtures::SQUANDER_SAVE_JSON);
    unsafe {
        assert_eq!(tc_scenario_r0(sc), 0.3);
        assert_eq!(tc_scenario_horizon(sc), 2);
        let mut sol = ptr::null_mut();
        assert_eq!(tc_solve(sc, f64::NAN, &mut sol), TcStatus::Ok);
        assert_eq!(tc_solution_value(sol), -14.0);
        assert!((tc_solution_min_threshold(sol, 0, 0) - 0.185).abs() <= 1e-12);

        let label = CString::new("win").unwrap();
        let mut win = 0;
        assert_eq!(tc_scenario_state_index(sc, label.as_ptr(), &mut win), TcStatus::Ok);
        let mut v = 0.0;
        assert_eq!(tc_solution_value_at(sol, 1, win, 1.0, &mut v), TcStatus::Ok);
        assert_eq!(v, -50.0);
        assert_eq!(tc_solution_value_at(sol, 1, win, 0.0, &mut v), TcStatus::Ok);
        assert!(v.is_infinite());

        let n = tc_scenario_num_states(sc);
        let mut next = vec![0.0; n];
        let mut action = ptr::null_mut();
        assert_eq!(tc_solution_decide(sol, 0, 0, 0.3, &mut action, next.as_mut_ptr()), TcStatus::Ok);
        assert!(!take(action).is_empty());
        assert!(next.iter().any(|t| t.is_finite()));

        assert_eq!(tc_solution_decide(sol, 0, 0, 0.1, &mut action, ptr::null_mut()), TcStatus::Infeasible);
        assert_eq!(tc_solution_decide(sol, 2, 0, 0.3, &mut action, ptr::null_mut()), TcStatus::OutOfRange);
        tc_solution_free(sol);
        tc_scenario_free(sc);
    }
}

#[test]
fn infeasible_threshold_reports_floor() {
    let sc = scenario(tcrisk::fixtures::SQUANDER_SAVE_JSON);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { tc_solve(sc, 0.1, &mut sol) }, TcStatus::Infeasible);
    assert!(sol.is_null());
    assert!(last_error().contains("0.185"));
    unsafe { tc_scenario_free(sc) };
}

#[test]
fn invalid_documents_and_null_arguments() {
    let bad = CString::new("{\"horizon\": 1}").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { tc_scenario_from_json(bad.as_ptr(), &mut sc) }, TcStatus::InvalidInput);
    assert!(sc.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { tc_scenario_from_json(ptr::null(), &mut sc) }, TcStatus::NullPointer);
    assert_eq!(unsafe { tc_solve(ptr::null(), 0.0, &mut ptr::null_mut()) }, TcStatus::NullPointer);
    let missing = CString::new("/no/such/scenario.json").unwrap();
    assert_eq!(unsafe { tc_scenario_load(missing.as_ptr(), &mut sc) }, TcStatus::InvalidInput);
    unsafe {
        tc_scenario_free(ptr::null_mut());
        tc_solution_free(ptr::null_mut());
        tc_string_free(ptr::null_mut());
    }
}

#[test]
fn report_matches_library_report() {
    let sc = scenario(tcrisk::fixtures::SQUANDER_SAVE_JSON);
    let mut out = ptr::null_mut();
    let status = unsafe { tc_report(sc, TcCommand::Solve, TcFormat::Json, f64::NAN, true, 0, 0, &mut out) };
    assert_eq!(status, TcStatus::Ok);
    let via_ffi = take(out);
    let opts = tcrisk::report::RunOptions { oracle: true, ..Default::default() };
    let direct = tcrisk::report::solve_report(&tcrisk::fixtures::squander_save(), &opts).unwrap();
    assert_eq!(via_ffi, direct.to_json_string());

    let status = unsafe { tc_report(sc, TcCommand::Rollout, TcFormat::Text, f64::NAN, false, 50, 3, &mut out) };
    assert_eq!(status, TcStatus::Ok);
    assert!(take(out).contains("rollout"));
    unsafe { tc_scenario_free(sc) };
}

#[test]
fn header_is_generated_and_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = format!("{dir}/include/tcrisk.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["tc_solve", "tc_report", "tc_last_error_message", "TC_STATUS_INFEASIBLE = 3", "typedef struct TcScenario TcScenario"] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else { return };
    if !cc.status.success() {
        return;
    }
    let src = std::env::temp_dir().join(format!("tcrisk-header-{}.c", std::process::id()));
    std::fs::write(&src, "#include \"tcrisk.h\"\nint main(void) { return tc_version() == 0; }\n").unwrap();
    let st = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(st.success());
}
