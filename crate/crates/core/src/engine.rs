//! Path exploration by re-execution.
//!
//! A test body is an ordinary function over an [`Exec`] handle. Every
//! non-constant decision it makes (branch, assertion, guarded operation) is a
//! site; the sequence of sides taken is the path's trace. To explore a sibling
//! the body is simply run again from scratch under a trace prefix ending in
//! the other side. Traces are dequeued shallowest first, FIFO among equals.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{Model, PathCondition, Solver, SolverError, Verdict};
use crate::symarray::{ArrayError, SymArray};
use crate::term::{OperatorTag, SymbolTable, Term, TermError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PartialReason {
    OverallTimeout,
    SolverTimeout,
    StepBudget,
    MemoryBudget,
    QueueBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    AssertionFailure,
    DivideByZero,
    Overshift,
    OutOfBounds,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: ErrorKind,
    pub site: String,
    /// Value of every symbol declared before the error; symbols the solver
    /// did not mention are 0.
    pub witness: BTreeMap<String, u64>,
}

/// Why a test body stopped before its end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Stop {
    #[error("path pruned by assumption")]
    Pruned,
    #[error("path partial: {0:?}")]
    Partial(PartialReason),
    #[error("path errored")]
    Errored,
    /// Misuse of the API by the test body or an internal inconsistency.
    #[error("fault: {0}")]
    Fault(String),
}

impl From<TermError> for Stop {
    fn from(e: TermError) -> Stop {
        Stop::Fault(e.to_string())
    }
}

impl From<SolverError> for Stop {
    fn from(e: SolverError) -> Stop {
        Stop::Fault(e.to_string())
    }
}

impl From<ArrayError> for Stop {
    fn from(e: ArrayError) -> Stop {
        Stop::Fault(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub overall_timeout_s: f64,
    pub solver_timeout_s: f64,
    /// Distinct term nodes a single path condition may hold.
    pub memory_budget: usize,
    pub frontier_budget: usize,
    /// Process activations per path, enforced by the kernel.
    pub step_budget: u64,
    pub max_paths: Option<u64>,
    pub array_min: bool,
    pub array_min_threshold: usize,
    pub abort_on_first_error: bool,
    /// Keep per-path records (trace, pc, observations) in the result.
    pub record_paths: bool,
}

impl Default for ExploreConfig {
    fn default() -> ExploreConfig {
        ExploreConfig {
            overall_timeout_s: 300.0,
            solver_timeout_s: 10.0,
            memory_budget: 4_000_000,
            frontier_budget: 50_000,
            step_budget: 100_000,
            max_paths: None,
            array_min: true,
            array_min_threshold: 8,
            abort_on_first_error: false,
            record_paths: true,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Mode {
    Symbolic,
    /// Every symbol reads as the given value (0 when absent); no solver is
    /// consulted. With `ignore_assumes` assumptions are not enforced.
    Concrete {
        values: BTreeMap<String, u64>,
        ignore_assumes: bool,
    },
}

const DECISIONS_PER_STEP: u64 = 10;

/// Handle through which a test body talks to the explorer.
pub struct Exec<'a> {
    solver: &'a mut Solver,
    cfg: &'a ExploreConfig,
    mode: &'a Mode,
    trace: &'a [bool],
    taken: Vec<bool>,
    pc: PathCondition,
    symbols: SymbolTable,
    siblings: Vec<Vec<bool>>,
    errors: Vec<ErrorRecord>,
    observations: Vec<(String, Term)>,
    deadline: Instant,
    pc_nodes: HashSet<usize>,
    decisions: u64,
}

impl<'a> Exec<'a> {
    fn new(
        solver: &'a mut Solver,
        cfg: &'a ExploreConfig,
        mode: &'a Mode,
        trace: &'a [bool],
        deadline: Instant,
    ) -> Exec<'a> {
        Exec {
            solver,
            cfg,
            mode,
            trace,
            taken: Vec::new(),
            pc: PathCondition::new(),
            symbols: SymbolTable::new(),
            siblings: Vec::new(),
            errors: Vec::new(),
            observations: Vec::new(),
            deadline,
            pc_nodes: HashSet::new(),
            decisions: 0,
        }
    }

    pub fn config(&self) -> &ExploreConfig {
        self.cfg
    }

    pub fn is_concrete(&self) -> bool {
        matches!(self.mode, Mode::Concrete { .. })
    }

    pub fn pc(&self) -> &PathCondition {
        &self.pc
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn errors(&self) -> &[ErrorRecord] {
        &self.errors
    }

    pub fn trace(&self) -> &[bool] {
        &self.taken
    }

    pub fn step_budget(&self) -> u64 {
        self.cfg.step_budget
    }

    pub fn solver(&mut self) -> &mut Solver {
        self.solver
    }

    /// Fresh symbol, or its concrete value when replaying concretely.
    pub fn symbol(&mut self, name: &str, width: u32) -> Result<Term, Stop> {
        let sym = self.symbols.declare(name, width)?;
        match self.mode {
            Mode::Symbolic => Ok(sym),
            Mode::Concrete { values, .. } => Ok(Term::lit(width, values.get(name).copied().unwrap_or(0))),
        }
    }

    /// Fails the path once the overall deadline has passed.
    pub fn tick(&self) -> Result<(), Stop> {
        if Instant::now() > self.deadline {
            return Err(Stop::Partial(PartialReason::OverallTimeout));
        }
        Ok(())
    }

    fn require_bool(cond: &Term) -> Result<(), Stop> {
        if cond.width() != 1 {
            return Err(Stop::Fault(format!("condition of width {}", cond.width())));
        }
        Ok(())
    }

    fn recorded_side(&self) -> Option<bool> {
        self.trace.get(self.taken.len()).copied()
    }

    fn push_pc(&mut self, c: Term) -> Result<(), Stop> {
        if !self.pc.push(c.clone())? {
            return Ok(());
        }
        let mut stack = vec![c];
        while let Some(t) = stack.pop() {
            if self.pc_nodes.insert(t.ptr_key()) {
                stack.extend(t.children().iter().cloned());
            }
        }
        if self.pc_nodes.len() > self.cfg.memory_budget {
            return Err(Stop::Partial(PartialReason::MemoryBudget));
        }
        Ok(())
    }

    fn decide(&mut self, extra: &Term, want_model: bool) -> Result<(Verdict, Option<Model>), Stop> {
        let r = self.solver.check_sat_given(&self.pc, std::slice::from_ref(extra), want_model)?;
        Ok((r.verdict, r.model))
    }

    fn non_concrete(&self, what: &str) -> Result<(), Stop> {
        if self.is_concrete() {
            return Err(Stop::Fault(format!("symbolic {} during concrete replay", what)));
        }
        Ok(())
    }

    /// Returns the side taken; forks when both sides are feasible.
    pub fn branch(&mut self, cond: &Term) -> Result<bool, Stop> {
        Self::require_bool(cond)?;
        self.tick()?;
        // Loops inside one activation are bounded here rather than by the kernel.
        self.decisions += 1;
        if self.decisions > self.cfg.step_budget.saturating_mul(DECISIONS_PER_STEP) {
            return Err(Stop::Partial(PartialReason::StepBudget));
        }
        if let Some(v) = cond.as_const() {
            return Ok(v == 1);
        }
        self.non_concrete("branch")?;
        if self.pc.contains(cond) {
            return Ok(true);
        }
        let neg = cond.not()?;
        if self.pc.contains(&neg) {
            return Ok(false);
        }
        let side = match self.recorded_side() {
            Some(s) => s,
            None => match self.decide(cond, false)?.0 {
                Verdict::Unknown => return Err(Stop::Partial(PartialReason::SolverTimeout)),
                // pc is satisfiable, so the other side must be.
                Verdict::Unsat => false,
                Verdict::Sat => match self.decide(&neg, false)?.0 {
                    Verdict::Unknown => return Err(Stop::Partial(PartialReason::SolverTimeout)),
                    Verdict::Unsat => true,
                    Verdict::Sat => {
                        let mut sib = self.taken.clone();
                        sib.push(false);
                        self.siblings.push(sib);
                        true
                    }
                },
            },
        };
        self.taken.push(side);
        self.push_pc(if side { cond.clone() } else { neg })?;
        Ok(side)
    }

    /// Adds `cond` to the path condition; an unsatisfiable result prunes the
    /// path.
    pub fn assume(&mut self, cond: &Term) -> Result<(), Stop> {
        Self::require_bool(cond)?;
        self.tick()?;
        if let Mode::Concrete { ignore_assumes, .. } = self.mode {
            if *ignore_assumes || cond.is_true() {
                return Ok(());
            }
            if cond.is_false() {
                return Err(Stop::Pruned);
            }
            return Err(Stop::Fault("symbolic assumption during concrete replay".into()));
        }
        if cond.is_true() || self.pc.contains(cond) {
            return Ok(());
        }
        if cond.is_false() {
            return Err(Stop::Pruned);
        }
        match self.decide(cond, false)?.0 {
            Verdict::Unknown => Err(Stop::Partial(PartialReason::SolverTimeout)),
            Verdict::Unsat => Err(Stop::Pruned),
            Verdict::Sat => self.push_pc(cond.clone()),
        }
    }

    fn witness(&self, model: Option<&Model>) -> BTreeMap<String, u64> {
        match self.mode {
            Mode::Concrete { values, .. } => self
                .symbols
                .iter()
                .map(|(_, n, _)| (n.to_string(), values.get(n).copied().unwrap_or(0)))
                .collect(),
            Mode::Symbolic => self
                .symbols
                .iter()
                .map(|(id, n, _)| (n.to_string(), model.and_then(|m| m.get(&id)).copied().unwrap_or(0)))
                .collect(),
        }
    }

    fn record(&mut self, kind: ErrorKind, site: &str, model: Option<&Model>) {
        let witness = self.witness(model);
        log::debug!("{:?} at {}: {:?}", kind, site, witness);
        self.errors.push(ErrorRecord {
            kind,
            site: site.to_string(),
            witness,
        });
    }

    /// Records an error of `kind` if `cond` can be false, then continues
    /// under `cond` if it can be true.
    pub fn check(&mut self, kind: ErrorKind, cond: &Term, site: &str) -> Result<(), Stop> {
        Self::require_bool(cond)?;
        self.tick()?;
        if cond.is_true() || self.pc.contains(cond) {
            return Ok(());
        }
        if cond.is_false() {
            let model = if self.is_concrete() {
                None
            } else {
                match self.solver.check_sat_given(&self.pc, &[], true)? {
                    r if r.verdict == Verdict::Sat => r.model,
                    _ => return Err(Stop::Partial(PartialReason::SolverTimeout)),
                }
            };
            self.record(kind, site, model.as_ref());
            return Err(Stop::Errored);
        }
        self.non_concrete("check")?;
        if self.recorded_side().is_none() {
            let neg = cond.not()?;
            let (fail, model) = self.decide(&neg, true)?;
            match fail {
                Verdict::Unknown => return Err(Stop::Partial(PartialReason::SolverTimeout)),
                Verdict::Unsat => {}
                Verdict::Sat => {
                    self.record(kind, site, model.as_ref());
                    match self.decide(cond, false)?.0 {
                        Verdict::Unknown => return Err(Stop::Partial(PartialReason::SolverTimeout)),
                        Verdict::Unsat => return Err(Stop::Errored),
                        Verdict::Sat => {}
                    }
                }
            }
        }
        self.taken.push(true);
        self.push_pc(cond.clone())
    }

    pub fn check_assert(&mut self, cond: &Term, site: &str) -> Result<(), Stop> {
        self.check(ErrorKind::AssertionFailure, cond, site)
    }

    /// Records an Unreachable error for the current path and ends it.
    pub fn unreachable(&mut self, site: &str) -> Stop {
        match self.check(ErrorKind::Unreachable, &Term::bool(false), site) {
            Err(s) => s,
            Ok(()) => Stop::Errored,
        }
    }

    fn nonzero(&mut self, b: &Term, site: &str) -> Result<(), Stop> {
        let z = Term::lit(b.width(), 0);
        let cond = b.ne(&z)?;
        self.check(ErrorKind::DivideByZero, &cond, site)
    }

    pub fn checked_udiv(&mut self, a: &Term, b: &Term, site: &str) -> Result<Term, Stop> {
        self.nonzero(b, site)?;
        Ok(a.udiv(b)?)
    }

    pub fn checked_urem(&mut self, a: &Term, b: &Term, site: &str) -> Result<Term, Stop> {
        self.nonzero(b, site)?;
        Ok(a.urem(b)?)
    }

    /// Shift whose amount must be below the operand width.
    pub fn checked_shift(&mut self, tag: OperatorTag, a: &Term, amt: &Term, site: &str) -> Result<Term, Stop> {
        if !matches!(tag, OperatorTag::Shl | OperatorTag::Lshr | OperatorTag::Ashr) {
            return Err(Stop::Fault(format!("{} is not a shift", tag)));
        }
        let w = a.width() as u64;
        let cond = if amt.width() < 64 && w > crate::term::mask(amt.width()) {
            Term::bool(true)
        } else {
            amt.ult(&Term::lit(amt.width(), w))?
        };
        self.check(ErrorKind::Overshift, &cond, site)?;
        Ok(Term::apply(tag, &[a.clone(), amt.clone()])?)
    }

    /// Requires `addr .. addr+len` to lie inside `[lo, lo+size)`.
    pub fn check_bounds(&mut self, addr: &Term, len: u64, lo: u64, size: u64, site: &str) -> Result<(), Stop> {
        let w = addr.width();
        let m = crate::term::mask(w) as u128;
        if (lo as u128 + size as u128) > m + 1 || len == 0 || len > size {
            return Err(Stop::Fault(format!("bad bounds at {}", site)));
        }
        let first = Term::lit(w, lo);
        let last_start = Term::lit(w, lo + size - len);
        let cond = first.ule(addr)?.and(&addr.ule(&last_start)?)?;
        self.check(ErrorKind::OutOfBounds, &cond, site)
    }

    /// Byte read honoring the array-minimisation setting.
    pub fn read(&mut self, arr: &SymArray, index: &Term) -> Result<Term, Stop> {
        self.tick()?;
        Ok(arr.read(index, &self.pc, self.solver, self.cfg.array_min, self.cfg.array_min_threshold)?)
    }

    pub fn read_le(&mut self, arr: &SymArray, index: &Term, bytes: u32) -> Result<Term, Stop> {
        self.tick()?;
        Ok(arr.read_le(
            index,
            bytes,
            &self.pc,
            self.solver,
            self.cfg.array_min,
            self.cfg.array_min_threshold,
        )?)
    }

    /// Records an output value for differential comparison.
    pub fn observe(&mut self, label: &str, value: &Term) {
        self.observations.push((label.to_string(), value.clone()));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathStatus {
    Complete,
    Partial(PartialReason),
    Pruned,
    Errored,
    Fault(String),
}

#[derive(Debug, Clone)]
pub struct PathRecord {
    pub trace: Vec<bool>,
    pub status: PathStatus,
    pub pc: PathCondition,
    pub observations: Vec<(String, Term)>,
    pub symbols: Vec<(String, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub test: String,
    pub backend: String,
    pub array_min: bool,
    pub paths_complete: u64,
    pub paths_partial: u64,
    pub paths_pruned: u64,
    pub paths_errored: u64,
    pub partial_reasons: BTreeMap<PartialReason, u64>,
    pub frontier_remaining: u64,
    pub time_s: f64,
    pub solver_time_s: f64,
    pub solver_time_share: f64,
    pub queries: u64,
    pub cache_hits: u64,
    pub solver_timeouts: u64,
    pub array_cells_serialized: u64,
    pub errors: Vec<ErrorRecord>,
    pub faults: Vec<String>,
    pub config: ExploreConfig,
}

impl Report {
    fn new(test: &str, backend: &str, cfg: &ExploreConfig) -> Report {
        Report {
            test: test.to_string(),
            backend: backend.to_string(),
            array_min: cfg.array_min,
            paths_complete: 0,
            paths_partial: 0,
            paths_pruned: 0,
            paths_errored: 0,
            partial_reasons: BTreeMap::new(),
            frontier_remaining: 0,
            time_s: 0.0,
            solver_time_s: 0.0,
            solver_time_share: 0.0,
            queries: 0,
            cache_hits: 0,
            solver_timeouts: 0,
            array_cells_serialized: 0,
            errors: Vec::new(),
            faults: Vec::new(),
            config: cfg.clone(),
        }
    }

    /// Copy with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn normalized(&self) -> Report {
        Report {
            time_s: 0.0,
            solver_time_s: 0.0,
            solver_time_share: 0.0,
            ..self.clone()
        }
    }

    pub fn error_kinds(&self) -> BTreeMap<ErrorKind, u64> {
        let mut m = BTreeMap::new();
        for e in &self.errors {
            *m.entry(e.kind).or_default() += 1;
        }
        m
    }

    fn add_partial(&mut self, r: PartialReason) {
        self.paths_partial += 1;
        *self.partial_reasons.entry(r).or_default() += 1;
    }
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub report: Report,
    pub paths: Vec<PathRecord>,
    /// Trace depth of every dequeued execution, in order.
    pub depths: Vec<usize>,
}

/// Explores every path of `test` breadth-first.
pub fn explore<F>(name: &str, test: F, cfg: &ExploreConfig, solver: &mut Solver) -> Exploration
where
    F: Fn(&mut Exec) -> Result<(), Stop>,
{
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(cfg.overall_timeout_s);
    solver.set_timeout(Duration::from_secs_f64(cfg.solver_timeout_s));
    let before = solver.stats().clone();
    let mode = Mode::Symbolic;
    let mut report = Report::new(name, solver.backend_name(), cfg);
    let mut paths = Vec::new();
    let mut depths = Vec::new();
    let mut frontier: BinaryHeap<Reverse<(usize, u64, Vec<bool>)>> = BinaryHeap::new();
    let mut seq = 0u64;
    frontier.push(Reverse((0, seq, Vec::new())));
    let mut finished = 0u64;
    while let Some(Reverse((depth, s, trace))) = frontier.pop() {
        if Instant::now() > deadline || cfg.max_paths.is_some_and(|m| finished >= m) {
            frontier.push(Reverse((depth, s, trace)));
            break;
        }
        depths.push(depth);
        let mut exec = Exec::new(solver, cfg, &mode, &trace, deadline);
        let outcome = test(&mut exec);
        let Exec {
            taken,
            pc,
            symbols,
            siblings,
            errors,
            observations,
            ..
        } = exec;
        let status = match outcome {
            Ok(()) => {
                report.paths_complete += 1;
                PathStatus::Complete
            }
            Err(Stop::Pruned) => {
                report.paths_pruned += 1;
                PathStatus::Pruned
            }
            Err(Stop::Partial(r)) => {
                report.add_partial(r);
                PathStatus::Partial(r)
            }
            Err(Stop::Errored) => PathStatus::Errored,
            Err(Stop::Fault(m)) => {
                report.faults.push(m.clone());
                PathStatus::Fault(m)
            }
        };
        finished += 1;
        let any_error = !errors.is_empty();
        report.paths_errored += errors.len() as u64;
        report.errors.extend(errors);
        for sib in siblings {
            if frontier.len() >= cfg.frontier_budget {
                report.add_partial(PartialReason::QueueBudget);
                continue;
            }
            seq += 1;
            frontier.push(Reverse((sib.len(), seq, sib)));
        }
        if cfg.record_paths {
            paths.push(PathRecord {
                trace: taken,
                status,
                pc,
                observations,
                symbols: symbols.iter().map(|(_, n, w)| (n.to_string(), w)).collect(),
            });
        }
        if cfg.abort_on_first_error && any_error {
            break;
        }
    }
    report.frontier_remaining = frontier.len() as u64;
    let after = solver.stats();
    report.time_s = start.elapsed().as_secs_f64();
    report.queries = after.query_count - before.query_count;
    report.cache_hits = after.cache_hits - before.cache_hits;
    report.solver_timeouts = after.timeout_count - before.timeout_count;
    report.solver_time_s = after.total_solver_time - before.total_solver_time;
    report.solver_time_share = if report.time_s > 0.0 {
        (report.solver_time_s / report.time_s).min(1.0)
    } else {
        0.0
    };
    report.array_cells_serialized = after.array_cells_serialized - before.array_cells_serialized;
    Exploration { report, paths, depths }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub status: PathStatus,
    pub observations: Vec<(String, u64)>,
    pub errors: Vec<ErrorRecord>,
}

/// Runs `test` once with every symbol fixed to a concrete value.
pub fn replay<F>(test: F, cfg: &ExploreConfig, values: &BTreeMap<String, u64>, ignore_assumes: bool) -> Replay
where
    F: Fn(&mut Exec) -> Result<(), Stop>,
{
    let mut solver = Solver::builtin(Duration::from_secs_f64(cfg.solver_timeout_s));
    let mode = Mode::Concrete {
        values: values.clone(),
        ignore_assumes,
    };
    let deadline = Instant::now() + Duration::from_secs_f64(cfg.overall_timeout_s);
    let mut exec = Exec::new(&mut solver, cfg, &mode, &[], deadline);
    let status = match test(&mut exec) {
        Ok(()) => PathStatus::Complete,
        Err(Stop::Pruned) => PathStatus::Pruned,
        Err(Stop::Partial(r)) => PathStatus::Partial(r),
        Err(Stop::Errored) => PathStatus::Errored,
        Err(Stop::Fault(m)) => PathStatus::Fault(m),
    };
    let observations = exec
        .observations
        .iter()
        .map(|(l, t)| (l.clone(), t.as_const().unwrap_or(u64::MAX)))
        .collect();
    Replay {
        status,
        observations,
        errors: exec.errors,
    }
}

/// Substitutes a witness (by symbol name) into a path condition.
pub fn witness_satisfies(pc: &PathCondition, witness: &BTreeMap<String, u64>) -> bool {
    let env: HashMap<_, _> = Term::symbols_of(pc.constraints())
        .into_iter()
        .map(|(id, n, _)| (id, witness.get(&*n).copied().unwrap_or(0)))
        .collect();
    pc.holds_under(&env)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slv() -> Solver {
        Solver::builtin(Duration::from_secs(10))
    }

    fn run<F: Fn(&mut Exec) -> Result<(), Stop>>(f: F) -> Exploration {
        explore("t", f, &ExploreConfig::default(), &mut slv())
    }

    fn c(w: u32, v: u64) -> Term {
        Term::lit(w, v)
    }

    #[test]
    fn constant_branch_needs_no_query() {
        let x = run(|e| {
            assert!(e.branch(&Term::bool(true))?);
            Ok(())
        });
        assert_eq!((x.report.paths_complete, x.report.queries), (1, 0));
    }

    #[test]
    fn symbolic_branch_forks() {
        let x = run(|e| {
            let a = e.symbol("a", 8)?;
            let z = e.branch(&a.eq(&c(8, 0))?)?;
            e.observe("z", &Term::bool(z));
            Ok(())
        });
        assert_eq!(x.report.paths_complete, 2);
        assert_eq!(x.paths[0].trace, vec![true]);
        assert_eq!(x.paths[1].trace, vec![false]);
        assert_eq!(x.depths, vec![0, 1]);
    }

    #[test]
    fn tautology_does_not_fork() {
        let x = run(|e| {
            let a = e.symbol("a", 4)?;
            e.branch(&a.ult(&c(4, 15))?.or(&a.eq(&c(4, 15))?)?)?;
            Ok(())
        });
        assert_eq!(x.report.paths_complete, 1);
    }

    #[test]
    fn assumptions_prune() {
        let x = run(|e| {
            let a = e.symbol("a", 4)?;
            e.assume(&a.ult(&c(4, 8))?)?;
            let pc = e.pc().clone();
            assert_eq!(e.solver().solve_max(&a, &pc)?, 7);
            e.assume(&a.ugt(&c(4, 9))?)?;
            Ok(())
        });
        assert_eq!((x.report.paths_complete, x.report.paths_pruned), (0, 1));
        let x = run(|e| e.assume(&Term::bool(false)));
        assert_eq!(x.report.paths_pruned, 1);
    }

    #[test]
    fn division_guard_records_witness() {
        let x = run(|e| {
            let a = e.symbol("x", 8)?;
            let b = e.symbol("y", 8)?;
            let q = e.checked_udiv(&a, &b, "div")?;
            e.observe("q", &q);
            let h = e.checked_udiv(&a, &c(8, 2), "half")?;
            e.observe("h", &h);
            Ok(())
        });
        assert_eq!(x.report.paths_complete, 1);
        assert_eq!(x.report.errors.len(), 1);
        let err = &x.report.errors[0];
        assert_eq!(err.kind, ErrorKind::DivideByZero);
        assert_eq!(err.witness["y"], 0);
        let pc = &x.paths[0].pc;
        assert_eq!(pc.len(), 1);
    }

    #[test]
    fn overshift_by_constant_is_unconditional() {
        let x = run(|e| {
            let a = e.symbol("x", 8)?;
            e.checked_shift(OperatorTag::Shl, &a, &c(8, 9), "sh")?;
            Ok(())
        });
        assert_eq!(x.report.paths_complete, 0);
        assert_eq!(x.report.errors[0].kind, ErrorKind::Overshift);
    }

    #[test]
    fn narrow_shift_amount_cannot_overshift() {
        let x = run(|e| {
            let a = e.symbol("x", 8)?;
            let s = e.symbol("s", 2)?.zext(8)?;
            e.checked_shift(OperatorTag::Shl, &a, &s, "sh")?;
            Ok(())
        });
        assert_eq!(x.report.paths_complete, 1);
        assert!(x.report.errors.is_empty());
    }

    #[test]
    fn assertion_on_tautology_is_silent() {
        let x = run(|e| {
            let a = e.symbol("a", 4)?;
            e.assume(&a.ult(&c(4, 4))?)?;
            e.check_assert(&a.ult(&c(4, 5))?, "taut")?;
            Ok(())
        });
        assert!(x.report.errors.is_empty());
        assert_eq!(x.report.paths_complete, 1);
    }

    #[test]
    fn failing_assertion_witness_replays() {
        let body = |e: &mut Exec| -> Result<(), Stop> {
            let a = e.symbol("a", 4)?;
            let b = e.symbol("b", 4)?;
            if e.branch(&a.ult(&b)?)? {
                e.check_assert(&a.add(&b)?.ne(&c(4, 7))?, "sum")?;
            }
            Ok(())
        };
        let x = run(body);
        assert_eq!(x.report.errors.len(), 1);
        let w = &x.report.errors[0].witness;
        assert_eq!((w["a"], w["b"]), (0, 7));
        let r = replay(body, &ExploreConfig::default(), w, false);
        assert_eq!(r.status, PathStatus::Errored);
        assert_eq!(r.errors[0].kind, ErrorKind::AssertionFailure);
        assert_eq!(r.errors[0].site, "sum");
    }

    #[test]
    fn exploration_is_reproducible() {
        let body = |e: &mut Exec| -> Result<(), Stop> {
            let a = e.symbol("a", 3)?;
            let b = e.symbol("b", 3)?;
            let mut acc = a.clone();
            for k in 0..3 {
                if e.branch(&acc.ult(&b)?)? {
                    acc = acc.add(&c(3, k + 1))?;
                }
            }
            e.check_assert(&acc.ne(&c(3, 6))?, "six")?;
            Ok(())
        };
        let r1 = run(body).report.normalized();
        let r2 = run(body).report.normalized();
        assert_eq!(r1, r2);
        assert!(r1.paths_complete > 1);
    }

    #[test]
    fn complete_paths_are_satisfiable() {
        let x = run(|e| {
            let a = e.symbol("a", 4)?;
            let b = e.symbol("b", 4)?;
            if e.branch(&a.ult(&b)?)? {
                e.branch(&b.eq(&c(4, 3))?)?;
            } else {
                e.branch(&a.eq(&b)?)?;
            }
            Ok(())
        });
        assert_eq!(x.report.paths_complete, 4);
        let mut s = slv();
        for p in &x.paths {
            assert!(s.check_sat(&p.pc, &[], false).unwrap().is_sat());
        }
        assert!(x.depths.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn memory_budget_marks_partial() {
        let cfg = ExploreConfig {
            memory_budget: 10,
            ..ExploreConfig::default()
        };
        let x = explore(
            "t",
            |e| {
                let a = e.symbol("a", 8)?;
                let mut t = a.clone();
                for _ in 0..20 {
                    t = t.add(&a)?;
                    e.assume(&t.ne(&c(8, 1))?)?;
                }
                Ok(())
            },
            &cfg,
            &mut slv(),
        );
        assert_eq!(x.report.partial_reasons[&PartialReason::MemoryBudget], 1);
    }

    #[test]
    fn unreachable_is_an_error() {
        let x = run(|e| {
            let a = e.symbol("a", 2)?;
            if e.branch(&a.eq(&c(2, 3))?)? {
                return Err(e.unreachable("never"));
            }
            Ok(())
        });
        assert_eq!(x.report.paths_complete, 1);
        assert_eq!(x.report.errors[0].kind, ErrorKind::Unreachable);
        assert_eq!(x.report.errors[0].witness["a"], 3);
    }

    #[test]
    fn bounds_check() {
        let x = run(|e| {
            let a = e.symbol("a", 8)?;
            e.check_bounds(&a, 4, 0, 64, "ob")?;
            Ok(())
        });
        assert_eq!(x.report.errors[0].kind, ErrorKind::OutOfBounds);
        assert_eq!(x.report.errors[0].witness["a"], 61);
    }
}
