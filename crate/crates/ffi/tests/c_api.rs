use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lanchester_ncw_ffi::*;

fn preset(name: &str) -> *mut NcwScenario {
    let name = CString::new(name).unwrap();
    let mut scn = ptr::null_mut();
    assert_eq!(
        unsafe { ncw_scenario_preset(name.as_ptr(), &mut scn) },
        NcwStatus::Ok
    );
    scn
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ncw_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn plans_experiment_three() {
    let scn = preset("exp3");
    unsafe {
        let mut n = 0;
        assert_eq!(ncw_scenario_agent_count(scn, &mut n), NcwStatus::Ok);
        assert_eq!(n, 2);

        let mut b = [0.0; 3];
        assert_eq!(ncw_threat_rates(scn, b.as_mut_ptr(), 3), NcwStatus::Ok);
        assert!((b[0] - 0.35).abs() < 1e-12 && (b[2] - 0.48).abs() < 1e-12);

        let mut c = ptr::null_mut();
        assert_eq!(ncw_plan_campaign(scn, 1e-3, 100.0, &mut c), NcwStatus::Ok);
        let mut stages = 0;
        ncw_campaign_stage_count(c, &mut stages);
        let targets: Vec<i32> = (0..stages)
            .map(|k| {
                let mut t = -2;
                assert_eq!(ncw_campaign_stage_target(c, k, &mut t), NcwStatus::Ok);
                t
            })
            .collect();
        assert_eq!(targets, [2, 1, 0]);
        let mut outcome = NcwOutcome::Stalemate;
        ncw_campaign_outcome(c, &mut outcome);
        assert_eq!(outcome, NcwOutcome::BlueWins);
        let mut blue = 0.0;
        ncw_campaign_final_state(c, ptr::null_mut(), &mut blue, ptr::null_mut());
        assert!((blue - 128.84).abs() < 0.01, "{blue}");

        let mut csv = ptr::null_mut();
        assert_eq!(ncw_campaign_timeseries_csv(c, &mut csv), NcwStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        assert!(text.starts_with("t,stage,B,R,A1,A2,p0,p1,p2\n"));
        ncw_string_free(csv);
        ncw_campaign_free(c);
        ncw_scenario_free(scn);
    }
}

#[test]
fn fixed_policy_can_lose() {
    let scn = preset("exp2");
    let policy = [0.0, 1.0, 0.0];
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(
            ncw_simulate_policy(scn, policy.as_ptr(), 1, 1e-3, 100.0, &mut c),
            NcwStatus::Ok
        );
        let mut outcome = NcwOutcome::BlueWins;
        ncw_campaign_outcome(c, &mut outcome);
        assert_eq!(outcome, NcwOutcome::BlueAnnihilated);
        ncw_campaign_free(c);
        ncw_scenario_free(scn);
    }
}

#[test]
fn builds_scenarios_from_arrays_and_json() {
    let (ad, ac, a0, r) = ([0.15, 0.1], [0.4, 0.3], [30.0, 20.0], [0.3, 0.4]);
    let mut from_arrays = ptr::null_mut();
    let status = unsafe {
        ncw_scenario_new(
            200.0,
            120.0,
            0.5,
            2,
            ad.as_ptr(),
            ac.as_ptr(),
            a0.as_ptr(),
            r.as_ptr(),
            &mut from_arrays,
        )
    };
    assert_eq!(status, NcwStatus::Ok);

    let json = CString::new(
        r#"{"schema_version": 1, "scenario": {"blue": 200, "red": 120, "r_red": 0.5,
           "agents": [{"alpha_d": 0.15, "alpha_c": 0.4, "a0": 30, "r": 0.3},
                      {"alpha_d": 0.1, "alpha_c": 0.3, "a0": 20, "r": 0.4}]}}"#,
    )
    .unwrap();
    let mut from_json = ptr::null_mut();
    assert_eq!(
        unsafe { ncw_scenario_from_json(json.as_ptr(), &mut from_json) },
        NcwStatus::Ok
    );

    let rates = |s| {
        let mut b = [0.0; 3];
        assert_eq!(
            unsafe { ncw_threat_rates(s, b.as_mut_ptr(), 3) },
            NcwStatus::Ok
        );
        b
    };
    assert_eq!(rates(from_arrays), rates(from_json));
    assert_eq!(rates(from_json), rates(preset("exp3")));
    unsafe {
        ncw_scenario_free(from_arrays);
        ncw_scenario_free(from_json);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut scn = ptr::null_mut();
        assert_eq!(
            ncw_scenario_preset(ptr::null(), &mut scn),
            NcwStatus::NullPointer
        );
        assert!(scn.is_null());

        let bad = CString::new("exp9").unwrap();
        assert_eq!(
            ncw_scenario_preset(bad.as_ptr(), &mut scn),
            NcwStatus::InvalidInput
        );
        assert!(last_error().contains("exp9"));

        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            ncw_scenario_from_json(not_utf8.as_ptr().cast(), &mut scn),
            NcwStatus::InvalidUtf8
        );

        let json = CString::new(r#"{"schema_version": 1, "scenario": {"blue": 1}}"#).unwrap();
        assert_eq!(
            ncw_scenario_from_json(json.as_ptr(), &mut scn),
            NcwStatus::InvalidInput
        );
        assert!(last_error().contains("scenario"), "{}", last_error());

        let scn = preset("exp1");
        let mut b = [0.0; 2];
        assert_eq!(
            ncw_threat_rates(scn, b.as_mut_ptr(), 2),
            NcwStatus::BufferTooSmall
        );

        let mut c = ptr::null_mut();
        assert_eq!(
            ncw_plan_campaign(scn, -1.0, 100.0, &mut c),
            NcwStatus::InvalidInput
        );
        assert!(last_error().contains("dt"), "{}", last_error());

        let off_simplex = [0.5, 0.2, 0.1];
        assert_eq!(
            ncw_simulate_policy(scn, off_simplex.as_ptr(), 1, 1e-3, 100.0, &mut c),
            NcwStatus::InvalidInput
        );
        assert!(c.is_null());

        let mut t = 0;
        assert_eq!(ncw_plan_campaign(scn, 1e-3, 100.0, &mut c), NcwStatus::Ok);
        assert_eq!(
            ncw_campaign_stage_target(c, 7, &mut t),
            NcwStatus::InvalidInput
        );
        ncw_campaign_free(c);
        ncw_scenario_free(scn);

        ncw_scenario_free(ptr::null_mut());
        ncw_campaign_free(ptr::null_mut());
        ncw_string_free(ptr::null_mut());
    }
}

#[test]
fn square_law_endgame() {
    let (mut b, mut r) = (f64::NAN, f64::NAN);
    unsafe {
        assert_eq!(
            ncw_square_law_final(23800f64.sqrt(), 120.0, 0.5, 0.25, &mut b, &mut r),
            NcwStatus::Ok
        );
        assert!((b - 16600f64.sqrt()).abs() < 1e-9 && r == 0.0);
        assert_eq!(
            ncw_square_law_final(10.0, 100.0, 0.5, 0.25, &mut b, &mut r),
            NcwStatus::Ok
        );
        assert!(b == 0.0 && r > 0.0);
        assert_eq!(
            ncw_square_law_final(-1.0, 100.0, 0.5, 0.25, &mut b, &mut r),
            NcwStatus::InvalidInput
        );
    }
}

#[test]
fn header_declares_the_interface() {
    let header = include_str!("../include/lanchester_ncw.h");
    for name in [
        "ncw_scenario_new",
        "ncw_scenario_from_json",
        "ncw_scenario_preset",
        "ncw_threat_rates",
        "ncw_plan_campaign",
        "ncw_simulate_policy",
        "ncw_campaign_timeseries_csv",
        "ncw_square_law_final",
        "ncw_last_error_message",
        "typedef struct NcwScenario NcwScenario",
        "NCW_STATUS_BUFFER_TOO_SMALL = 5",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles the C smoke program against the header and static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .and_then(|deps| deps.parent())
        .unwrap()
        .to_path_buf();
    // `cargo test` builds only the rlib; ask for the static library too.
    let mut cargo = Command::new(env!("CARGO"));
    cargo
        .args([
            "build",
            "--quiet",
            "-p",
            "lanchester-ncw-ffi",
            "--manifest-path",
        ])
        .arg(manifest.join("Cargo.toml"));
    if !cfg!(debug_assertions) {
        cargo.arg("--release");
    }
    let built = cargo.status().unwrap();
    assert!(built.success());
    let lib = target_dir.join("liblanchester_ncw_ffi.a");
    assert!(lib.is_file(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "b=0.35,0.30,0.48 stages=3 targets=2,1,0 outcome=0 blue=128.841\n"
    );
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
