use std::process::{Command, Output};

use coopruin::cli::Report;
use coopruin::montecarlo::wilson;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopruin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_report(args: &[&str]) -> (Report, i32) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = run(&full);
    let text = String::from_utf8(out.stdout).unwrap();
    (serde_json::from_str(&text).unwrap(), out.status.code().unwrap())
}

#[test]
fn single_agent_survival_matches_ruin_formula() {
    let (r, code) = json_report(&[
        "survival", "--graph", "complete:1", "--phi", "point:2", "--c", "2", "--mu", "0", "--replicas", "20000",
    ]);
    assert_eq!(code, 0);
    let point = r.rows[0]["point"].as_f64().unwrap();
    // Oracle: 1 - 2^-3 at 3-sigma Wilson width.
    let k = (point * 20000.0).round() as u64;
    let (lo, hi) = wilson(k, 20000, 3.0);
    assert!(lo <= 0.875 && 0.875 <= hi, "{point}");
}

#[test]
fn low_rate_kills_without_cooperation() {
    let (r, code) = json_report(&[
        "survival", "--graph", "path:2", "--phi", "list:0.5,1.25", "--c", "5", "--mu", "0", "--replicas", "2000",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r.rows[0]["point"].as_f64().unwrap(), 0.0);
    assert_eq!(r.rows[0]["analytic"].as_f64().unwrap(), 0.0);
}

#[test]
fn same_seed_same_bytes() {
    let args = [
        "survival", "--graph", "cycle:4", "--phi", "uniform:1.5,2.5", "--c", "1", "--mu", "inf", "--replicas", "500",
        "--seed", "42", "--format", "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let other = run(&[&args[..args.len() - 4], &["--seed", "43", "--format", "json"]].concat());
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn region_violation_is_usage_error() {
    let out = run(&["two-person", "--phi-x", "1.2", "--phi-y", "1.3", "--c", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the region"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(run(&["survival", "--graph", "path:2"]).status.code(), Some(1));
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(
        run(&["survival", "--graph", "path:2", "--phi", "bogus:1", "--c", "1", "--mu", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn two_person_table_without_mc() {
    let (r, code) = json_report(&["two-person", "--phi-x", "0.5", "--phi-y", "1.25", "--c", "1", "--replicas", "0"]);
    assert_eq!(code, 0);
    let e_inf = r.rows.iter().find(|row| row["quantity"] == "E_inf").unwrap();
    let e0 = r.rows.iter().find(|row| row["quantity"] == "E_0").unwrap();
    assert!((e_inf["closed_form"].as_f64().unwrap() - 0.1639).abs() < 1e-4);
    assert!((e0["exact"].as_f64().unwrap() - 0.36).abs() < 1e-12);
    assert!(r.checks.iter().all(|c| c.passed));
}

#[test]
fn constant_subcritical_field_is_all_sinks() {
    let (r, code) = json_report(&[
        "sinks", "--phi", "point:0.5", "--eps", "0.25", "--ring", "101", "--horizon", "20", "--replicas", "2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r.rows[0]["sink_density"].as_f64().unwrap(), 1.0);
}

#[test]
fn supercritical_field_warns() {
    let out = run(&["sinks", "--phi", "point:2", "--ring", "51", "--tmax", "5", "--replicas", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E(phi) = 2 >= 1"));
}

#[test]
fn out_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ruin.csv");
    let out = run(&[
        "ruin", "--phi-bar", "2", "--start", "2", "--upper", "4", "--format", "csv", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,closed_form,oracle,abs_diff"));
    let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(cells[0], "reach_upper_first");
    assert!((cells[1].parse::<f64>().unwrap() - 0.8).abs() < 1e-15);
}

#[test]
fn trajectory_streams() {
    let base = ["trajectory", "--graph", "path:3", "--phi", "list:1,2,3", "--c", "2", "--mu", "1", "--tmax", "2"];
    let json = run(&[&base[..], &["--format", "json"]].concat());
    let events = coopruin::dynamics::read_events_jsonl(std::str::from_utf8(&json.stdout).unwrap()).unwrap();
    assert!(!events.is_empty());
    assert!(events.windows(2).all(|w| w[0].t <= w[1].t));
    let csv = run(&[&base[..], &["--format", "csv", "--dt", "0.5"]].concat());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("t,z0,z1,z2"));
    assert_eq!(text.lines().count(), 1 + 5);
}

#[test]
fn sinks_profile_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let out = run(&[
        "sinks", "--phi", "uniform:0.4,1.2", "--ring", "61", "--horizon", "10", "--tmax", "3", "--replicas", "2",
        "--profile", path.to_str().unwrap(), "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 62);
}

#[test]
fn json_report_round_trips() {
    let args = ["compare", "--graph", "complete:2", "--phi", "list:1.5,2.5", "--c-max", "100", "--format", "json"];
    let out = run(&args);
    let text = String::from_utf8(out.stdout).unwrap();
    let r: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(r.render(coopruin::cli::Format::Json), text);
    assert_eq!(r.params["c0"], 1);
}
