use std::fs;

use lanchester_ncw::cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lanchester-ncw").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn reproduce_exp1_reports_rates_and_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = invoke(&[
        "reproduce",
        "exp1",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("b = (0.35, 0.3, 0.24)"), "{out}");
    assert!(out.contains("P* = (1, 0, 0)"), "{out}");
    assert!(dir.path().join("exp1_optimal.csv").is_file());
    assert!(dir.path().join("exp1_P1.csv").is_file());
}

#[test]
fn reproduce_exp2_flags_the_rate_inconsistency() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = invoke(&[
        "reproduce",
        "exp2",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("0.7536"), "{out}");
    assert!(out.contains("r2 = 0.2"), "{out}");
    assert!(dir.path().join("exp2_r2-0.2.csv").is_file());
}

#[test]
fn verify_exp2_passes_for_the_a2_vertex() {
    let (code, out, err) = invoke(&["verify", "exp2", "--grid-step", "0.05"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.contains("(0, 0, 1)"), "{out}");
    assert!(!out.contains("FAIL"), "{out}");
}

#[test]
fn plan_without_agents_is_a_square_law_battle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("duel.json");
    fs::write(
        &path,
        r#"{"schema_version": 1, "scenario": {"blue": 100, "red": 80, "r_red": 0.5, "agents": []}}"#,
    )
    .unwrap();
    let (code, out, err) = invoke(&["plan", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("square-law endgame"), "{out}");
    assert_eq!(out.matches("stage ").count(), 1, "{out}");
}

#[test]
fn simulate_writes_csv_to_stdout() {
    let (code, out, _) = invoke(&["simulate", "exp1", "--policy", "P1"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,stage,B,R,A1,A2,p0,p1,p2"));
    assert!(lines.count() > 100);
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let first = invoke(&["plan", "exp3", "--output", a.to_str().unwrap()]);
    let second = invoke(&["plan", "exp3", "--output", b.to_str().unwrap()]);
    assert_eq!(first.0, 0);
    assert_eq!(
        first.1.replace(a.to_str().unwrap(), ""),
        second.1.replace(b.to_str().unwrap(), "")
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        invoke(&["simulate", "exp2", "--policy", "P2"]),
        invoke(&["simulate", "exp2", "--policy", "P2"])
    );
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    assert_eq!(invoke(&[]).0, 2);
    assert_eq!(invoke(&["plan"]).0, 2);
    assert_eq!(invoke(&["plan", "no-such-preset"]).0, 2);
    assert_eq!(invoke(&["reproduce", "exp9"]).0, 2);
    assert_eq!(invoke(&["simulate", "exp1", "--policy", "nope"]).0, 2);
    assert_eq!(invoke(&["verify", "exp1", "--grid-step", "0.3"]).0, 2);
    assert_eq!(invoke(&["plan", "exp1", "--dt", "-1"]).0, 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"schema_version\": 1,\n  \"scenario\": [").unwrap();
    let (code, _, err) = invoke(&["plan", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("reproduce"));
}
