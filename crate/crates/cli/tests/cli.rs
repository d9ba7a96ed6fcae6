use std::process::{Command, Output};

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_height2"));
    cmd.args(args).env_remove("HEIGHT2_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_fgl_passes() {
    let o = run(&["verify", "fgl"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("[-2](t)=t^4"), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("[pass]")).count(), 2);
}

#[test]
fn lseries_text_and_json() {
    let o = run(&["lseries", "--element", "alpha2", "--order", "8"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("1+z^6+O(z^8)"), "{out}");
    assert!(out.contains("[pass]"));
    let o = run(&["lseries", "--element", "omega", "--order", "6", "--format", "json"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["element"], "omega");
    assert_eq!(v["l"], "1");
    assert_eq!(v["order"], 6);
}

#[test]
fn error_kinds_have_distinct_exit_codes() {
    let unknown = run(&["lseries", "--element", "beta"], &[]).status.code();
    let precision = run(&["--precision", "8", "verify", "fgl"], &[]).status.code();
    let argument = run(&["verify", "group", "--depth", "30"], &[]).status.code();
    let usage = run(&["frobnicate"], &[]).status.code();
    let codes = [unknown, precision, argument, usage];
    assert!(codes.iter().all(|c| c.is_some_and(|c| c > 1)), "{codes:?}");
    for i in 0..codes.len() {
        for j in 0..i {
            assert_ne!(codes[i], codes[j]);
        }
    }
}

#[test]
fn json_reports_are_reproducible_and_seed_env_wins() {
    let args = ["milnor-moore", "--trials", "5", "--format", "json", "--no-timing", "--seed", "9"];
    let a = run(&args, &[]);
    let b = run(&args, &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let mut other = args.to_vec();
    other[args.len() - 1] = "1";
    let c = run(&other, &[("HEIGHT2_SEED", "9")]);
    assert_eq!(a.stdout, c.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 1);
    for key in ["check", "status", "expected", "actual", "ms"] {
        assert!(arr[0].get(key).is_some(), "{key}");
    }
    assert_eq!(arr[0]["ms"], 0);
}

#[test]
fn report_covers_each_criterion_once() {
    let o = run(&["report", "--all", "--format", "json", "--no-timing"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
    assert_eq!(ids, height2::checks::CRITERIA.to_vec());
    assert!(v.as_array().unwrap().iter().all(|r| r["status"] == "pass"));
}

#[test]
fn small_subcommands_pass() {
    for args in [
        vec!["verify", "group", "--depth", "6"],
        vec!["invariants", "--max-degree", "5"],
        vec!["pairings"],
        vec!["action-table"],
    ] {
        let o = run(&args, &[]);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stdout(&o));
    }
}
