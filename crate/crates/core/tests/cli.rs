mod common;

use std::path::Path;
use std::process::Command;

use common::*;
use ocpm_conformance::cli::run;
use ocpm_conformance::metrics::ConformanceReport;
use ocpm_conformance::ocel::parse_log;
use ocpm_conformance::ocpn::parse_model;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ocpm(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("ocpm").chain(args.iter().copied()), &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path(name: &str) -> String {
    fixture_path(name).to_string_lossy().into_owned()
}

#[test]
fn check_prints_summary_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let out = ocpm(&[
        "check",
        "--log",
        &path("l1.json"),
        "--model",
        &path("ocpn1.json"),
        "-o",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, "fitness=1.00 precision=0.89 skipped=0%\n");
    let report: ConformanceReport = serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report.num_events, 18);
    assert_eq!(report.per_event.len(), 18);
}

#[test]
fn check_without_output_appends_json() {
    let out = ocpm(&["check", &path("l1.json"), &path("flower_l1.json"), "--decimals", "3"]);
    assert_eq!(out.code, 0);
    let (summary, json) = out.stdout.split_once('\n').unwrap();
    assert_eq!(summary, "fitness=1.000 precision=0.291 skipped=0%");
    let report: ConformanceReport = serde_json::from_str(json).unwrap();
    assert_eq!(report.fitness, ratio(1, 1));
}

#[test]
fn check_restricted_skips_events() {
    let out = ocpm(&["check", &path("l1.json"), &path("restricted.json")]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.starts_with("fitness=0.44 precision=1.00 skipped=56%\n"));
}

#[test]
fn check_warns_on_truncation() {
    let out = ocpm(&["check", &path("l1.json"), &path("ocpn1.json"), "--max-states", "1"]);
    assert_eq!(out.code, 0);
    assert!(out.stderr.contains("warning"));
    assert!(out.stdout.contains("\"truncated\": true"));
}

#[test]
fn explain_shows_context_states_and_enabled_sets() {
    let out = ocpm(&["explain", &path("l1.json"), &path("ocpn1.json"), "--event", "e5"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("preset: {e1, e2, e3, e4}\n"));
    assert!(out.stdout.contains("context: baggage: [<Check-in, Load cargo>^2], plane: [<Fuel plane, Load cargo>]\n"));
    assert!(out.stdout.contains("context group: {e5, e14}\n"));
    assert!(out.stdout.contains("states: 4\n"));
    assert!(out.stdout.contains("en_log: {Lift off}\n"));
    assert!(out.stdout.contains("en_model: {Lift off, Pick up @ dest}\n"));
}

#[test]
fn flower_output_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("flower.json");
    let out = ocpm(&["flower", "--log", &path("l1.json"), "-o", target.to_str().unwrap()]);
    assert_eq!(out.code, 0);
    assert_eq!(std::fs::read(&target).unwrap(), fixture_bytes("flower_l1.json"));
    let stdout = ocpm(&["flower", &path("l1.json")]);
    assert!(parse_model(stdout.stdout.as_bytes()).is_ok());
}

#[test]
fn simulate_is_deterministic_and_checkable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for target in [&a, &b] {
        let out = ocpm(&[
            "simulate",
            "--model",
            &path("ocpn1.json"),
            "--instances",
            "5",
            "--seed",
            "9",
            "-o",
            target.to_str().unwrap(),
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(parse_log(&std::fs::read(&a).unwrap()).is_ok());
    let out = ocpm(&["check", a.to_str().unwrap(), &path("ocpn1.json")]);
    assert!(out.stdout.starts_with("fitness=1.00 "));
    assert!(out.stdout.contains(" skipped=0%"));
}

#[test]
fn exit_codes() {
    let missing = Path::new("/definitely/not/here.json").to_str().unwrap();
    assert_eq!(ocpm(&["check", missing, &path("ocpn1.json")]).code, 3);
    assert_eq!(ocpm(&["check", &path("ocpn1.json"), &path("ocpn1.json")]).code, 2);
    assert_eq!(ocpm(&["check", &path("l1.json"), &path("l1.json")]).code, 2);
    assert_eq!(ocpm(&["check", &path("l1.json")]).code, 2);
    assert_eq!(ocpm(&["explain", &path("l1.json"), &path("ocpn1.json"), "--event", "e99"]).code, 2);
    assert_eq!(ocpm(&["check", &path("l1.json"), &path("ocpn1.json"), "--max-states", "0"]).code, 2);
    assert_eq!(ocpm(&["simulate", &path("ocpn1.json"), "--instances", "0"]).code, 2);
    assert_eq!(ocpm(&["bogus"]).code, 2);
    assert_eq!(ocpm(&["--help"]).code, 0);

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"object_types":[],"objects":{},"events":[]}"#).unwrap();
    assert_eq!(ocpm(&["check", empty.to_str().unwrap(), &path("ocpn1.json")]).code, 2);
    let unwritable = dir.path().join("missing-dir").join("out.json");
    assert_eq!(ocpm(&["flower", &path("l1.json"), "-o", unwritable.to_str().unwrap()]).code, 3);
}

#[test]
fn binary_uses_the_same_contract() {
    let out = Command::new(env!("CARGO_BIN_EXE_ocpm"))
        .args(["check", &path("l1.json"), &path("ocpn1.json"), "-o", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "fitness=1.00 precision=0.89 skipped=0%\n");
    let out = Command::new(env!("CARGO_BIN_EXE_ocpm")).args(["explain"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
