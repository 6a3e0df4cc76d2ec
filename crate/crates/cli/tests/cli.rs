use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value as Json;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn ucheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucheck")).args(args).output().expect("binary runs")
}

fn reports(out: &Output) -> Vec<Json> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("each line is JSON"))
        .collect()
}

fn example_args(mode: &str) -> Vec<String> {
    vec![
        data("example_net.json").display().to_string(),
        data("example_log.json").display().to_string(),
        "-u".into(),
        mode.into(),
    ]
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ucheck(&refs)
}

#[test]
fn fit_costs_of_the_example_log() {
    let out = run(&example_args("fit"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = reports(&out);
    let costs: Vec<&str> = r.iter().map(|j| j["cost"].as_str().unwrap()).collect();
    assert_eq!(costs, ["41/20", "0", "1"]);
    assert_eq!(r[0]["cost_decimal"], "2.05");
    assert_eq!(r[0]["mode"], "fit");
    assert_eq!(r[0]["trace"], 0);
    let kinds: Vec<&str> = r[0]["alignment"].as_array().unwrap().iter().map(|m| m["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["sync", "sync", "model"]);
    assert_eq!(r[0]["incomplete"], false);
    assert_eq!(r[0]["verified"], true);
}

#[test]
fn min_cost_of_the_example_trace() {
    let out = run(&example_args("min"));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(reports(&out)[0]["cost"], "1");
}

#[test]
fn missing_mode_is_a_usage_error() {
    let out = ucheck(&[&data("example_net.json").display().to_string(), &data("example_log.json").display().to_string()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn unreadable_input_exits_1() {
    let out = ucheck(&["/nonexistent/net.json", &data("example_log.json").display().to_string(), "-u", "fit"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reading model"));
}

#[test]
fn parallel_reports_keep_input_order() {
    let strip = |mut v: Vec<Json>| {
        for j in &mut v {
            j.as_object_mut().unwrap().remove("solve_ms");
        }
        v
    };
    let mut args = example_args("fit");
    let one = strip(reports(&run(&args)));
    args.extend(["--jobs".into(), "3".into()]);
    let three = strip(reports(&run(&args)));
    assert_eq!(one, three);
}

#[test]
fn oracle_agrees_on_the_example_log() {
    let mut args = example_args("fit");
    args.push("--oracle".into());
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    for r in reports(&out) {
        assert_eq!(r["oracle"]["agrees"], true, "{r}");
        assert_eq!(r["oracle"]["cost"], r["cost"]);
    }
}

#[test]
fn dump_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("out.json");
    let smt = dir.path().join("smt");
    let mut args = example_args("min");
    args.extend([
        "--dump-smt".into(),
        smt.display().to_string(),
        "-o".into(),
        out_file.display().to_string(),
        "--profile".into(),
        "tighten".into(),
    ]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_file).unwrap();
    assert_eq!(text.lines().count(), 3);
    for i in 0..3 {
        let p = smt.join(format!("trace_{i}.smt2"));
        assert!(std::fs::read_to_string(p).unwrap().contains("(check-sat)"));
    }
}

#[test]
fn failed_trace_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    std::fs::write(
        &net,
        r#"{"places": ["p", "q"],
            "transitions": [{"id": "t", "label": "t"}],
            "arcs": [{"from": "q", "to": "t"}, {"from": "t", "to": "p"}],
            "marking_initial": {"p": 1}, "marking_final": {"q": 1}}"#,
    )
    .unwrap();
    let log = dir.path().join("log.json");
    std::fs::write(&log, r#"{"traces": [{"events": []}]}"#).unwrap();
    let out = ucheck(&[&net.display().to_string(), &log.display().to_string(), "-u", "fit"]);
    assert_eq!(out.status.code(), Some(2));
    let r = reports(&out);
    assert!(r[0]["error"].as_str().unwrap().contains("no process run"));
    assert!(r[0].get("cost").is_none());
}

#[test]
fn penalty_table_changes_the_cost() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("pen.json");
    std::fs::write(&table, r#"{"c": {"model": 3}}"#).unwrap();
    let mut args = example_args("min");
    args.extend(["--penalties".into(), table.display().to_string(), "--oracle".into()]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = reports(&out);
    let costs: Vec<&str> = r.iter().map(|j| j["cost"].as_str().unwrap()).collect();
    // c now costs 3 as a model move, so the d branch wins at the price of a data mismatch
    assert_eq!(costs, ["3/2", "0", "3/2"]);
    assert!(r.iter().all(|j| j["oracle"]["agrees"] == true));
}
