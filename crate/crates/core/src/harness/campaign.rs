//! Single-site mutation campaign with a concrete differential oracle.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{replay, ErrorKind, ExploreConfig, PathStatus};
use crate::peripherals::mutation::{mutants, Mutation};
use crate::peripherals::{Level, Peripheral, Variant};
use crate::solver::Solver;
use crate::term::mask;

use super::{campaign_scenario, run_scenario, Scenario};

pub const DEFAULT_BUDGET_S: f64 = 120.0;
/// Activations per path during a campaign; mutants that stop terminating
/// run into it instead of the exploration budget.
pub const CAMPAIGN_STEP_BUDGET: u64 = 4_000;
/// Input spaces up to this many bits are replayed exhaustively.
pub const EXHAUSTIVE_BITS: u32 = 16;
pub const SAMPLES: usize = 4096;
const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Killed { kind: ErrorKind, site: String, time_s: f64 },
    /// Exploration ended without an error record.
    Alive { reason: String },
    Equivalent,
}

/// What concrete replay says about a mutant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleVerdict {
    NoDifference,
    /// Diverges only on inputs the scenario's assumptions exclude.
    OutsideDomainOnly,
    Differs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantResult {
    pub site: String,
    pub original: String,
    pub replacement: String,
    pub outcome: Outcome,
    pub oracle: OracleVerdict,
    pub note: Option<String>,
    pub paths_complete: u64,
    pub paths_partial: u64,
    pub frontier_remaining: u64,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub peripheral: Peripheral,
    pub level: Level,
    pub scenario: String,
    pub budget_s: f64,
    pub oracle_inputs: u64,
    pub oracle_exhaustive: bool,
    pub mutants: Vec<MutantResult>,
    pub total: u64,
    pub killed: u64,
    pub alive: u64,
    pub equivalent: u64,
    /// Mutants the oracle shows diverging inside the assumed input domain.
    pub behavior_changing: u64,
    pub killed_behavior_changing: u64,
    /// Percentage of behavior-changing mutants killed.
    pub kill_rate: f64,
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("no {kind} scenario for {peripheral} {level}")]
    NoScenario { peripheral: Peripheral, level: Level, kind: String },
    #[error("baseline {scenario} is not clean: {detail}")]
    Baseline { scenario: String, detail: String },
}

pub fn campaign_config(budget_s: f64) -> ExploreConfig {
    ExploreConfig {
        overall_timeout_s: budget_s,
        step_budget: CAMPAIGN_STEP_BUDGET,
        abort_on_first_error: true,
        record_paths: false,
        ..ExploreConfig::default()
    }
}

/// Input assignments the oracle replays: every assignment for small input
/// spaces, otherwise all-zero, all-ones and a seeded sample.
pub fn oracle_domain(s: &Scenario) -> (Vec<BTreeMap<String, u64>>, bool) {
    let bits = s.input_bits();
    let split = |mut v: u128| {
        let mut m = BTreeMap::new();
        for (n, w) in &s.inputs {
            m.insert(n.clone(), (v & mask(*w) as u128) as u64);
            v >>= w;
        }
        m
    };
    if bits <= EXHAUSTIVE_BITS {
        return ((0..1u128 << bits).map(split).collect(), true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = vec![split(0), split(u128::MAX)];
    while out.len() < SAMPLES {
        let m = s.inputs.iter().map(|(n, w)| (n.clone(), rng.gen::<u64>() & mask(*w))).collect();
        out.push(m);
    }
    (out, false)
}

type Behavior = (String, Vec<(String, u64)>, Vec<ErrorKind>);

fn behavior(s: &Scenario, v: &Variant, cfg: &ExploreConfig, values: &BTreeMap<String, u64>, ignore_assumes: bool) -> Behavior {
    let r = replay(|e| s.run(e, v), cfg, values, ignore_assumes);
    let status = match r.status {
        PathStatus::Partial(p) => format!("partial {p:?}"),
        PathStatus::Fault(f) => format!("fault {f}"),
        st => format!("{st:?}"),
    };
    let mut kinds: Vec<ErrorKind> = r.errors.iter().map(|e| e.kind).collect();
    kinds.sort();
    (status, r.observations, kinds)
}

/// Compares baseline and mutant by concrete replay over the domain.
pub fn differential(s: &Scenario, mutant: &Variant, cfg: &ExploreConfig, domain: &[BTreeMap<String, u64>]) -> OracleVerdict {
    let base = Variant::clean();
    let mut outside = false;
    for values in domain {
        let b = behavior(s, &base, cfg, values, false);
        if b.0 != "Pruned" {
            if b != behavior(s, mutant, cfg, values, false) {
                return OracleVerdict::Differs;
            }
        } else if !outside && behavior(s, &base, cfg, values, true) != behavior(s, mutant, cfg, values, true) {
            outside = true;
        }
    }
    if outside {
        OracleVerdict::OutsideDomainOnly
    } else {
        OracleVerdict::NoDifference
    }
}

fn run_mutant(s: &Scenario, m: &Mutation, cfg: &ExploreConfig, domain: &[BTreeMap<String, u64>]) -> MutantResult {
    let v = Variant {
        mutation: Some(m.clone()),
        ..Variant::clean()
    };
    let start = Instant::now();
    let mut solver = Solver::builtin(Duration::from_secs_f64(cfg.solver_timeout_s));
    let x = run_scenario(s, &v, cfg, &mut solver);
    let explore_s = start.elapsed().as_secs_f64();
    let oracle = differential(s, &v, cfg, domain);
    let r = &x.report;
    let outcome = if let Some(err) = r.errors.first() {
        Outcome::Killed {
            kind: err.kind,
            site: err.site.clone(),
            time_s: explore_s,
        }
    } else if oracle == OracleVerdict::NoDifference {
        Outcome::Equivalent
    } else {
        let reason = if r.frontier_remaining > 0 {
            "overall budget exhausted"
        } else if r.paths_partial > 0 {
            "partial paths only"
        } else {
            "exploration complete without errors"
        };
        Outcome::Alive { reason: reason.into() }
    };
    let note = match (&outcome, oracle) {
        (Outcome::Alive { .. }, OracleVerdict::OutsideDomainOnly) => {
            Some("diverges only on inputs excluded by the scenario's assumptions".into())
        }
        (Outcome::Killed { .. }, OracleVerdict::NoDifference) => {
            Some("killed although replay over the oracle domain shows no difference".into())
        }
        _ => None,
    };
    MutantResult {
        site: m.site.clone(),
        original: m.original().name().into(),
        replacement: m.replacement.name().into(),
        outcome,
        oracle,
        note,
        paths_complete: r.paths_complete,
        paths_partial: r.paths_partial,
        frontier_remaining: r.frontier_remaining,
        time_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs every single-site mutant of one DUV through the scenario of the
/// given kind. Refuses to start when the unmutated DUV already fails it.
pub fn run_campaign(p: Peripheral, level: Level, kind: &str, budget_s: f64) -> Result<CampaignResult, CampaignError> {
    let s = campaign_scenario(p, level, kind).ok_or_else(|| CampaignError::NoScenario {
        peripheral: p,
        level,
        kind: kind.into(),
    })?;
    let cfg = campaign_config(budget_s);
    let mut solver = Solver::builtin(Duration::from_secs_f64(cfg.solver_timeout_s));
    let base = run_scenario(&s, &Variant::clean(), &ExploreConfig { abort_on_first_error: false, ..cfg.clone() }, &mut solver);
    let r = &base.report;
    if !r.errors.is_empty() || !r.faults.is_empty() || r.paths_partial > 0 || r.frontier_remaining > 0 {
        return Err(CampaignError::Baseline {
            scenario: s.name.clone(),
            detail: format!(
                "{} errors, {} faults, {} partial, {} left in frontier",
                r.errors.len(),
                r.faults.len(),
                r.paths_partial,
                r.frontier_remaining
            ),
        });
    }
    let (domain, exhaustive) = oracle_domain(&s);
    let results: Vec<MutantResult> = mutants(p, level).iter().map(|m| run_mutant(&s, m, &cfg, &domain)).collect();
    Ok(summarize(p, level, &s, budget_s, domain.len() as u64, exhaustive, results))
}

fn summarize(
    p: Peripheral,
    level: Level,
    s: &Scenario,
    budget_s: f64,
    oracle_inputs: u64,
    oracle_exhaustive: bool,
    mutants: Vec<MutantResult>,
) -> CampaignResult {
    let count = |f: &dyn Fn(&MutantResult) -> bool| mutants.iter().filter(|m| f(m)).count() as u64;
    let killed = count(&|m| matches!(m.outcome, Outcome::Killed { .. }));
    let equivalent = count(&|m| m.outcome == Outcome::Equivalent);
    let behavior_changing = count(&|m| m.oracle == OracleVerdict::Differs);
    let killed_behavior_changing = count(&|m| m.oracle == OracleVerdict::Differs && matches!(m.outcome, Outcome::Killed { .. }));
    CampaignResult {
        peripheral: p,
        level,
        scenario: s.name.clone(),
        budget_s,
        oracle_inputs,
        oracle_exhaustive,
        total: mutants.len() as u64,
        killed,
        alive: mutants.len() as u64 - killed - equivalent,
        equivalent,
        behavior_changing,
        killed_behavior_changing,
        kill_rate: if behavior_changing == 0 {
            100.0
        } else {
            100.0 * killed_behavior_changing as f64 / behavior_changing as f64
        },
        mutants,
    }
}
