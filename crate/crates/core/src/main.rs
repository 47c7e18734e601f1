use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use xlsym::engine::{ExploreConfig, Report};
use xlsym::harness::campaign::{run_campaign, CampaignResult, DEFAULT_BUDGET_S};
use xlsym::harness::report::emit_report;
use xlsym::harness::{find, registry, run_scenario, CAMPAIGN_KINDS};
use xlsym::peripherals::mutation::{mutants, sites};
use xlsym::peripherals::{Level, Peripheral, Variant};
use xlsym::solver::builtin::DEFAULT_MAX_BITS;
use xlsym::solver::{BackendKind, Solver};

// Output errors (a closed pipe under `head`, say) are not worth a panic.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "xlsym", version, about = "Symbolic execution of RTL and TLM peripheral models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scenarios, peripherals, mutation sites and bug variants.
    List,
    /// Explores one scenario.
    Run {
        scenario: String,
        #[arg(long, default_value_t = 300.0)]
        timeout_s: f64,
        #[arg(long, default_value_t = 10.0)]
        solver_timeout_s: f64,
        #[arg(long, value_enum, default_value_t = OnOff::On)]
        array_min: OnOff,
        /// `builtin` or `external:<command>`.
        #[arg(long, default_value = "builtin")]
        solver: String,
        #[arg(long, default_value_t = 100_000)]
        step_budget: u64,
        /// Seeded bug variant; may be repeated.
        #[arg(long)]
        bug: Vec<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Mutation campaign over one DUV.
    Mutate {
        peripheral: String,
        level: String,
        /// standalone, cross, iface-read or iface-write.
        kind: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET_S)]
        budget_s: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn usage(msg: String) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn list() -> ExitCode {
    out!("scenarios:");
    for s in registry() {
        out!("  {:<24} {:<16} {}", s.name, s.kind.to_string(), s.description);
    }
    out!("peripherals:");
    for p in Peripheral::ALL {
        out!("  {p}");
        for (b, d) in p.bug_variants() {
            out!("    bug {b:<20} {d}");
        }
        for l in Level::ALL {
            let ids: Vec<_> = sites(p, l).iter().map(|s| format!("{}({})", s.id, s.original.name())).collect();
            out!("    {l} sites ({} mutants): {}", mutants(p, l).len(), ids.join(" "));
        }
    }
    out!("campaign kinds: {}", CAMPAIGN_KINDS.join(" "));
    ExitCode::SUCCESS
}

fn print_report(r: &Report) {
    out!(
        "{}: complete {} partial {} pruned {} errored {} frontier {} | {:.2} s, solver {:.0}%, {} queries, {} cells",
        r.test,
        r.paths_complete,
        r.paths_partial,
        r.paths_pruned,
        r.paths_errored,
        r.frontier_remaining,
        r.time_s,
        100.0 * r.solver_time_share,
        r.queries,
        r.array_cells_serialized
    );
    for e in &r.errors {
        out!("  {:?} at {} with {:?}", e.kind, e.site, e.witness);
    }
    for f in &r.faults {
        out!("  fault: {f}");
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    name: &str,
    timeout_s: f64,
    solver_timeout_s: f64,
    array_min: OnOff,
    solver: &str,
    step_budget: u64,
    bugs: &[String],
    report: Option<PathBuf>,
) -> ExitCode {
    let Some(s) = find(name) else {
        return usage(format!("unknown scenario `{name}`; see `xlsym list`"));
    };
    let Some(kind) = BackendKind::parse(solver) else {
        return usage(format!("bad solver `{solver}`"));
    };
    let mut variant = Variant::clean();
    for b in bugs {
        if !s.peripheral.bug_variants().iter().any(|(n, _)| n == b) {
            return usage(format!("{} has no bug variant `{b}`", s.peripheral));
        }
        variant.bugs.insert(b.clone());
    }
    let cfg = ExploreConfig {
        overall_timeout_s: timeout_s,
        solver_timeout_s,
        step_budget,
        array_min: matches!(array_min, OnOff::On),
        record_paths: false,
        ..ExploreConfig::default()
    };
    let mut slv = Solver::from_kind(&kind, Duration::from_secs_f64(solver_timeout_s), DEFAULT_MAX_BITS);
    let r = run_scenario(&s, &variant, &cfg, &mut slv).report;
    print_report(&r);
    if let Some(p) = report {
        if let Err(e) = emit_report(&r, &p) {
            return usage(format!("cannot write {}: {e}", p.display()));
        }
    }
    if !r.errors.is_empty() {
        ExitCode::from(1)
    } else if r.paths_complete == 0 && (r.paths_partial > 0 || r.frontier_remaining > 0) {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn print_campaign(c: &CampaignResult) {
    for m in &c.mutants {
        out!(
            "  {:<14} {:>5} -> {:<5} {:<60} oracle {:?}{}",
            m.site,
            m.original,
            m.replacement,
            format!("{:?}", m.outcome),
            m.oracle,
            m.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        );
    }
    out!(
        "{} {} via {}: {} mutants, {} killed, {} alive, {} equivalent; {}/{} behavior-changing killed ({:.2}%)",
        c.peripheral,
        c.level,
        c.scenario,
        c.total,
        c.killed,
        c.alive,
        c.equivalent,
        c.killed_behavior_changing,
        c.behavior_changing,
        c.kill_rate
    );
}

fn mutate(p: &str, l: &str, kind: &str, budget_s: f64, report: Option<PathBuf>) -> ExitCode {
    let Some(p) = Peripheral::parse(p) else {
        return usage(format!("unknown peripheral `{p}`"));
    };
    let Some(l) = Level::parse(l) else {
        return usage(format!("unknown level `{l}`"));
    };
    let c = match run_campaign(p, l, kind, budget_s) {
        Ok(c) => c,
        Err(e) => return usage(e.to_string()),
    };
    print_campaign(&c);
    if let Some(path) = report {
        if let Err(e) = emit_report(&c, &path) {
            return usage(format!("cannot write {}: {e}", path.display()));
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List => list(),
        Cmd::Run {
            scenario,
            timeout_s,
            solver_timeout_s,
            array_min,
            solver,
            step_budget,
            bug,
            report,
        } => run(&scenario, timeout_s, solver_timeout_s, array_min, &solver, step_budget, &bug, report),
        Cmd::Mutate {
            peripheral,
            level,
            kind,
            budget_s,
            report,
        } => mutate(&peripheral, &level, &kind, budget_s, report),
    }
}
