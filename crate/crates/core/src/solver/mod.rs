//! Satisfiability, may-equal, extremum and model queries over [`Term`]s.
//!
//! Two backends answer queries: [`builtin::BuiltinBackend`], an exhaustive
//! enumerator that is the ground truth at desk scale, and
//! [`external::ExternalBackend`], any SMT-LIB2 solver driven over stdin/stdout.
//! [`Solver`] sits in front of either one and adds the result cache, the
//! per-query timeout and the statistics reported per test.

pub mod builtin;
pub mod external;
pub mod smtlib;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{SymId, Term, TermError};

pub use builtin::BuiltinBackend;
pub use external::ExternalBackend;
pub use smtlib::serialize_query;

pub type Model = BTreeMap<SymId, u64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("constraint has width {0}, expected 1")]
    ConstraintWidth(u32),
    #[error("no extremum on dead path")]
    DeadPath,
    #[error("extremum unresolved")]
    Unresolved,
    #[error("operand widths differ: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Ordered conjunction of width-1 constraints. Appending never removes
/// earlier constraints; duplicates and constant-true constraints are dropped.
#[derive(Debug, Clone, Default)]
pub struct PathCondition {
    constraints: Vec<Term>,
    present: HashSet<Term>,
    /// `prefix_hash[i]` fingerprints `constraints[..i]`.
    prefix_hash: Vec<u64>,
    array_cells: u64,
}

impl PathCondition {
    pub fn new() -> PathCondition {
        PathCondition {
            prefix_hash: vec![0],
            ..Default::default()
        }
    }

    pub fn from_constraints(cs: impl IntoIterator<Item = Term>) -> Result<PathCondition, SolverError> {
        let mut pc = PathCondition::new();
        for c in cs {
            pc.push(c)?;
        }
        Ok(pc)
    }

    /// Appends `c`. Returns false when it was already implied syntactically
    /// (constant true or already present).
    pub fn push(&mut self, c: Term) -> Result<bool, SolverError> {
        if c.width() != 1 {
            return Err(SolverError::ConstraintWidth(c.width()));
        }
        if c.is_true() || self.present.contains(&c) {
            return Ok(false);
        }
        let mut h = DefaultHasher::new();
        self.fingerprint().hash(&mut h);
        c.structural_hash().hash(&mut h);
        self.prefix_hash.push(h.finish());
        self.array_cells += array_cells_in(std::slice::from_ref(&c));
        self.present.insert(c.clone());
        self.constraints.push(c);
        Ok(true)
    }

    pub fn contains(&self, c: &Term) -> bool {
        c.is_true() || self.present.contains(c)
    }

    pub fn constraints(&self) -> &[Term] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Fingerprint of the whole condition.
    pub fn fingerprint(&self) -> u64 {
        self.prefix_hash.last().copied().unwrap_or(0)
    }

    pub fn prefix_fingerprint(&self, len: usize) -> u64 {
        if self.prefix_hash.is_empty() {
            return 0;
        }
        self.prefix_hash[len]
    }

    pub fn has_false(&self) -> bool {
        self.constraints.iter().any(Term::is_false)
    }

    /// Literal cells of array reads occurring in the constraints.
    pub fn array_cells(&self) -> u64 {
        self.array_cells
    }

    /// Evaluates every constraint under `model`.
    pub fn holds_under(&self, model: &HashMap<SymId, u64>) -> bool {
        self.constraints.iter().all(|c| c.eval(model) == 1)
    }
}

/// Counts literal cells of distinct array-read nodes.
pub fn array_cells_in(roots: &[Term]) -> u64 {
    let with_reads: Vec<Term> = roots.iter().filter(|t| t.has_read()).cloned().collect();
    if with_reads.is_empty() {
        return 0;
    }
    Term::topo_order(&with_reads)
        .iter()
        .filter_map(|t| t.as_read().map(|r| r.cells.len() as u64))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub verdict: Verdict,
    pub model: Option<Model>,
    pub elapsed: f64,
}

impl QueryResult {
    pub fn is_sat(&self) -> bool {
        self.verdict == Verdict::Sat
    }
}

/// Raw backend answer before timing is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub verdict: Verdict,
    pub model: Option<Model>,
}

impl Answer {
    pub fn unknown() -> Answer {
        Answer {
            verdict: Verdict::Unknown,
            model: None,
        }
    }
}

pub trait Backend {
    fn name(&self) -> &str;

    /// Decides `pc ∧ extra`. When `pc_known_sat` is set the caller guarantees
    /// `pc` alone is satisfiable, which lets the backend skip constraints
    /// independent of `extra` unless a model is wanted.
    fn check(
        &mut self,
        pc: &PathCondition,
        extra: &[Term],
        want_model: bool,
        pc_known_sat: bool,
        timeout: Duration,
    ) -> Answer;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub query_count: u64,
    pub total_solver_time: f64,
    pub timeout_count: u64,
    pub cache_hits: u64,
    /// Array-literal cells contained in queries passed to the backend.
    pub array_cells_serialized: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    Builtin,
    /// Command line of an SMT-LIB2 solver reading a script on stdin.
    External(String),
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<BackendKind> {
        if s == "builtin" {
            Some(BackendKind::Builtin)
        } else {
            s.strip_prefix("external:")
                .filter(|c| !c.trim().is_empty())
                .map(|c| BackendKind::External(c.trim().to_string()))
        }
    }
}

#[derive(Hash, PartialEq, Eq)]
struct QueryKey {
    pc: u64,
    pc_len: usize,
    extra: Vec<u64>,
    want_model: bool,
    known_sat: bool,
}

pub struct Solver {
    backend: Box<dyn Backend>,
    timeout: Duration,
    stats: SolverStats,
    cache: HashMap<QueryKey, Answer>,
}

const CACHE_LIMIT: usize = 200_000;

impl Solver {
    pub fn new(backend: Box<dyn Backend>, timeout: Duration) -> Solver {
        Solver {
            backend,
            timeout,
            stats: SolverStats::default(),
            cache: HashMap::new(),
        }
    }

    pub fn builtin(timeout: Duration) -> Solver {
        Solver::new(Box::new(BuiltinBackend::default()), timeout)
    }

    pub fn from_kind(kind: &BackendKind, timeout: Duration, builtin_max_bits: u32) -> Solver {
        match kind {
            BackendKind::Builtin => Solver::new(Box::new(BuiltinBackend::new(builtin_max_bits)), timeout),
            BackendKind::External(cmd) => Solver::new(Box::new(ExternalBackend::new(cmd)), timeout),
        }
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn set_timeout(&mut self, t: Duration) {
        self.timeout = t;
    }

    pub fn check_sat(
        &mut self,
        pc: &PathCondition,
        extra: &[Term],
        want_model: bool,
    ) -> Result<QueryResult, SolverError> {
        self.query(pc, extra, want_model, false)
    }

    /// Like [`Solver::check_sat`] for callers that know `pc` is satisfiable.
    pub fn check_sat_given(
        &mut self,
        pc: &PathCondition,
        extra: &[Term],
        want_model: bool,
    ) -> Result<QueryResult, SolverError> {
        self.query(pc, extra, want_model, true)
    }

    fn query(
        &mut self,
        pc: &PathCondition,
        extra: &[Term],
        want_model: bool,
        known_sat: bool,
    ) -> Result<QueryResult, SolverError> {
        for c in extra {
            if c.width() != 1 {
                return Err(SolverError::ConstraintWidth(c.width()));
            }
        }
        if extra.iter().any(Term::is_false) || pc.has_false() {
            return Ok(QueryResult {
                verdict: Verdict::Unsat,
                model: None,
                elapsed: 0.0,
            });
        }
        let extra: Vec<Term> = extra.iter().filter(|c| !pc.contains(c)).cloned().collect();
        if known_sat && extra.is_empty() && !want_model {
            return Ok(QueryResult {
                verdict: Verdict::Sat,
                model: None,
                elapsed: 0.0,
            });
        }
        if pc.is_empty() && extra.is_empty() {
            return Ok(QueryResult {
                verdict: Verdict::Sat,
                model: want_model.then(Model::new),
                elapsed: 0.0,
            });
        }
        let key = QueryKey {
            pc: pc.fingerprint(),
            pc_len: pc.len(),
            extra: extra.iter().map(Term::structural_hash).collect(),
            want_model,
            known_sat,
        };
        if let Some(a) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(QueryResult {
                verdict: a.verdict,
                model: a.model.clone(),
                elapsed: 0.0,
            });
        }
        let start = Instant::now();
        let answer = self
            .backend
            .check(pc, &extra, want_model, known_sat, self.timeout);
        let elapsed = start.elapsed().as_secs_f64();
        self.stats.query_count += 1;
        self.stats.total_solver_time += elapsed;
        self.stats.array_cells_serialized += pc.array_cells() + array_cells_in(&extra);
        if answer.verdict == Verdict::Unknown {
            self.stats.timeout_count += 1;
        } else {
            if self.cache.len() >= CACHE_LIMIT {
                self.cache.clear();
            }
            self.cache.insert(key, answer.clone());
        }
        Ok(QueryResult {
            verdict: answer.verdict,
            model: answer.model,
            elapsed,
        })
    }

    /// True iff `t = v` is satisfiable under `pc`; an undecided query counts
    /// as true so callers only ever over-approximate.
    pub fn may_equal(&mut self, t: &Term, v: &Term, pc: &PathCondition) -> Result<bool, SolverError> {
        if t.width() != v.width() {
            return Err(SolverError::WidthMismatch(t.width(), v.width()));
        }
        let r = self.check_sat(pc, &[t.eq(v)?], false)?;
        Ok(r.verdict != Verdict::Unsat)
    }

    pub fn solve_min(&mut self, t: &Term, pc: &PathCondition) -> Result<u64, SolverError> {
        self.extremum(t, pc, false)
    }

    pub fn solve_max(&mut self, t: &Term, pc: &PathCondition) -> Result<u64, SolverError> {
        self.extremum(t, pc, true)
    }

    /// Binary search with at most `width + 1` satisfiability queries.
    fn extremum(&mut self, t: &Term, pc: &PathCondition, max: bool) -> Result<u64, SolverError> {
        let first = self.check_sat(pc, &[], false)?;
        match first.verdict {
            Verdict::Unsat => return Err(SolverError::DeadPath),
            Verdict::Unknown => return Err(SolverError::Unresolved),
            Verdict::Sat => {}
        }
        if let Some(v) = t.as_const() {
            return Ok(v);
        }
        let w = t.width();
        let (mut lo, mut hi) = (0u64, crate::term::mask(w));
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let probe = if max {
                // Is there a model with t > mid?
                Term::lit(w, mid).ult(t)?
            } else {
                t.ule(&Term::lit(w, mid))?
            };
            let r = self.check_sat_given(pc, &[probe], false)?;
            match (r.verdict, max) {
                (Verdict::Unknown, _) => return Err(SolverError::Unresolved),
                (Verdict::Sat, false) => hi = mid,
                (Verdict::Unsat, false) => lo = mid + 1,
                (Verdict::Sat, true) => lo = mid + 1,
                (Verdict::Unsat, true) => hi = mid,
            }
        }
        Ok(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::SymbolTable;

    fn c(w: u32, v: u64) -> Term {
        Term::lit(w, v)
    }

    fn solver() -> Solver {
        Solver::builtin(Duration::from_secs(10))
    }

    #[test]
    fn single_equality_has_model() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 8).unwrap();
        let r = solver()
            .check_sat(&PathCondition::new(), &[a.eq(&c(8, 3)).unwrap()], true)
            .unwrap();
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.model.unwrap()[&SymId(0)], 3);
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 8).unwrap();
        let pc = PathCondition::from_constraints([a.ult(&c(8, 2)).unwrap()]).unwrap();
        let r = solver().check_sat(&pc, &[a.eq(&c(8, 5)).unwrap()], false).unwrap();
        assert_eq!(r.verdict, Verdict::Unsat);
    }

    #[test]
    fn xor_model_checks_by_substitution() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 4).unwrap();
        let b = st.declare("b", 4).unwrap();
        let cond = a.xor(&b).unwrap().eq(&c(4, 0xf)).unwrap();
        let pc = PathCondition::from_constraints([cond.clone()]).unwrap();
        let r = solver().check_sat(&pc, &[], true).unwrap();
        let model: HashMap<SymId, u64> = r.model.unwrap().into_iter().collect();
        assert_eq!(cond.eval(&model), 1);
        // Least model in symbol-id-then-value order.
        assert_eq!((model[&SymId(0)], model[&SymId(1)]), (0, 15));
    }

    #[test]
    fn empty_condition_is_sat() {
        let r = solver().check_sat(&PathCondition::new(), &[], true).unwrap();
        assert!(r.is_sat());
    }

    #[test]
    fn malformed_width_is_rejected() {
        let mut pc = PathCondition::new();
        assert_eq!(pc.push(c(8, 1)), Err(SolverError::ConstraintWidth(8)));
        let r = solver().check_sat(&pc, &[c(4, 1)], false);
        assert_eq!(r, Err(SolverError::ConstraintWidth(4)));
    }

    #[test]
    fn may_equal_examples() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 4).unwrap();
        let pc = PathCondition::from_constraints([a.ult(&c(4, 3)).unwrap()]).unwrap();
        let mut s = solver();
        assert!(s.may_equal(&a, &c(4, 2), &pc).unwrap());
        assert!(!s.may_equal(&a, &c(4, 7), &pc).unwrap());
    }

    struct AlwaysUnknown;
    impl Backend for AlwaysUnknown {
        fn name(&self) -> &str {
            "unknown"
        }
        fn check(&mut self, _: &PathCondition, _: &[Term], _: bool, _: bool, _: Duration) -> Answer {
            Answer::unknown()
        }
    }

    #[test]
    fn unknown_is_may_equal_but_unresolved_extremum() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 4).unwrap();
        let pc = PathCondition::from_constraints([a.ult(&c(4, 3)).unwrap()]).unwrap();
        let mut s = Solver::new(Box::new(AlwaysUnknown), Duration::from_secs(1));
        assert!(s.may_equal(&a, &c(4, 9), &pc).unwrap());
        assert_eq!(s.solve_min(&a, &pc), Err(SolverError::Unresolved));
        assert_eq!(s.stats().timeout_count, 2);
    }

    #[test]
    fn extremum_examples() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 4).unwrap();
        let mut s = solver();
        let pc = PathCondition::from_constraints([
            c(4, 3).ule(&a).unwrap(),
            a.ule(&c(4, 6)).unwrap(),
            a.ne(&c(4, 5)).unwrap(),
        ])
        .unwrap();
        assert_eq!(s.solve_min(&a, &pc).unwrap(), 3);
        assert_eq!(s.solve_max(&a, &pc).unwrap(), 6);

        let empty = PathCondition::new();
        assert_eq!(s.solve_min(&c(8, 42), &empty).unwrap(), 42);
        assert_eq!(s.solve_max(&c(8, 42), &empty).unwrap(), 42);

        let pc = PathCondition::from_constraints([a.eq(&c(4, 15)).unwrap()]).unwrap();
        let t = a.add(&c(4, 1)).unwrap();
        assert_eq!(s.solve_min(&t, &pc).unwrap(), 0);
        assert_eq!(s.solve_max(&t, &pc).unwrap(), 0);
    }

    #[test]
    fn extremum_query_budget() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 8).unwrap();
        let pc = PathCondition::from_constraints([a.ugt(&c(8, 17)).unwrap()]).unwrap();
        let mut s = solver();
        assert_eq!(s.solve_min(&a, &pc).unwrap(), 18);
        assert!(s.stats().query_count <= 9);
    }

    #[test]
    fn dead_path_has_no_extremum() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 4).unwrap();
        let pc = PathCondition::from_constraints([
            a.ult(&c(4, 2)).unwrap(),
            a.ugt(&c(4, 8)).unwrap(),
        ])
        .unwrap();
        assert_eq!(solver().solve_min(&a, &pc), Err(SolverError::DeadPath));
    }

    #[test]
    fn backend_kind_parsing() {
        assert_eq!(BackendKind::parse("builtin"), Some(BackendKind::Builtin));
        assert_eq!(
            BackendKind::parse("external:z3 -in -smt2"),
            Some(BackendKind::External("z3 -in -smt2".into()))
        );
        assert_eq!(BackendKind::parse("external:"), None);
        assert_eq!(BackendKind::parse("stp"), None);
    }
}
