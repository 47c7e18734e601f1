use std::process::Command;
use std::time::Duration;

use xlsym::engine::{ExploreConfig, Report};
use xlsym::harness::campaign::CampaignResult;
use xlsym::harness::report::{emit_report, parse_report, to_json};
use xlsym::harness::{find, run_scenario};
use xlsym::peripherals::Variant;
use xlsym::solver::Solver;

fn explore(name: &str) -> Report {
    let s = find(name).unwrap();
    run_scenario(&s, &Variant::clean(), &ExploreConfig::default(), &mut Solver::builtin(Duration::from_secs(10))).report
}

// Each lane write forks on whether the output byte changes. A brute force
// over all 2^18 inputs finds 256 distinct change patterns.
#[test]
fn map_rtl_standalone_path_count() {
    let r = explore("map-rtl-standalone");
    assert_eq!(r.paths_complete, 256);
    assert_eq!((r.paths_partial, r.frontier_remaining), (0, 0));
    assert!(r.errors.is_empty());
}

#[test]
fn map_tlm_reference_is_its_own_expression() {
    let r = explore("map-tlm-standalone");
    assert_eq!((r.paths_complete, r.queries), (1, 0));
}

#[test]
fn signal_direct_inject_does_not_fork() {
    let r = explore("signal-direct-inject");
    assert_eq!(r.paths_complete, 1);
}

#[test]
fn reports_round_trip() {
    let r = explore("plic-rtl-threshold");
    let back: Report = parse_report(&to_json(&r)).unwrap();
    assert_eq!(back, r);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    emit_report(&r, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(parse_report::<Report>(&text).unwrap(), r);
    assert!(parse_report::<CampaignResult>(&text).is_err());
}

#[test]
fn exploration_is_deterministic() {
    let mut v = Variant::clean();
    v.bugs.insert("threshold-inversion".into());
    let s = find("plic-cross").unwrap();
    let cfg = ExploreConfig::default();
    let a = run_scenario(&s, &v, &cfg, &mut Solver::builtin(Duration::from_secs(10)));
    let b = run_scenario(&s, &v, &cfg, &mut Solver::builtin(Duration::from_secs(10)));
    assert_eq!(a.report.errors, b.report.errors);
    assert_eq!(a.depths, b.depths);
    let traces = |x: &xlsym::engine::Exploration| x.paths.iter().map(|p| (p.trace.clone(), p.status.clone())).collect::<Vec<_>>();
    assert_eq!(traces(&a), traces(&b));
    assert!(!a.report.errors.is_empty());
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_xlsym")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn cli_exit_codes() {
    let (code, out) = cli(&["list"]);
    assert_eq!(code, 0);
    assert!(out.contains("gcd-cross-4bit") && out.contains("bounds-check"));
    assert_eq!(cli(&["run", "no-such-scenario"]).0, 2);
    assert_eq!(cli(&["run", "gcd-tlm-standalone", "--bug", "no-such-bug"]).0, 2);
    assert_eq!(cli(&["run", "plic-rtl-threshold"]).0, 0);
    let (code, out) = cli(&["run", "plic-rtl-threshold", "--bug", "threshold-inversion"]);
    assert_eq!(code, 1);
    assert!(out.contains("AssertionFailure"));
    // A zero budget leaves the whole frontier unexplored.
    let (code, _) = cli(&["run", "signal-two-writes", "--timeout-s", "0"]);
    assert_eq!(code, 3);
}
