use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn catecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catecon")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn lawful_table_exits_zero_with_all_pass_report() {
    let out = catecon(&["check-laws", "--scenario", &scenario("metric.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let verdicts = report["law_reports"]["table/city_blocks"]["verdicts"].as_object().unwrap();
    assert_eq!(verdicts.len(), 4);
    assert!(verdicts.values().all(|v| v["passed"] == true));
}

#[test]
fn unknown_command_exits_two() {
    let out = catecon(&["tabulate", "--scenario", &scenario("demo.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown command `tabulate`"));
}

#[test]
fn missing_scenario_exits_two() {
    let out = catecon(&["simulate", "--scenario", "/nonexistent/s.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"));
}

#[test]
fn parse_errors_carry_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 1\nseed = 2\n").unwrap();
    let out = catecon(&["check-laws", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn log_format_needs_simulate() {
    let out = catecon(&["check-laws", "--scenario", &scenario("demo.toml"), "--format", "log"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_receives_report_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("run");
    let out = catecon(&[
        "simulate",
        "--scenario",
        &scenario("demo.toml"),
        "--rounds",
        "3",
        "--split",
        "0.25",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(target.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "simulate");
    let log = std::fs::read_to_string(target.join("events.jsonl")).unwrap();
    assert!(log.starts_with(r#"{"schema":1,"kind":"header","seed":7,"rounds":3}"#));
    // Three objects, one offer each per round.
    assert_eq!(log.lines().count(), 1 + 3 * 3);
}

#[test]
fn out_of_range_split_exits_two() {
    let out = catecon(&["simulate", "--scenario", &scenario("demo.toml"), "--split", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn arbitrage_found_exits_one() {
    let out = catecon(&["detect-arbitrage", "--scenario", &scenario("planted_m4.toml")]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let findings = report["arbitrage"]["table/shortcut"].as_array().unwrap();
    assert_eq!(findings.len(), 2);
    assert!(findings.iter().all(|f| f["extracted"] == 5.0));
}

#[test]
fn every_command_runs_on_the_demo() {
    for command in ["check-laws", "detect-arbitrage", "optimize-design", "optimize-price", "segment-report"] {
        let out = catecon(&[command, "--scenario", &scenario("demo.toml")]);
        assert_eq!(out.status.code(), Some(0), "{command}: {}", stderr(&out));
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["command"], command);
    }
}
