//! Exhaustive enumeration solver.
//!
//! Models are enumerated in symbol-id-then-value order, so the model returned
//! for a satisfiable query is the lexicographically least one. Queries whose
//! symbols exceed the bit budget come back Unknown.
//!
//! Two modes share the evaluator. While a path's symbols fit in the budget,
//! the backend keeps the full set of assignments satisfying the current path
//! condition and narrows it as the path grows, so a branch query only scans
//! surviving rows. Otherwise each query is split into independent components
//! and every component is searched depth-first with early pruning.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use crate::term::{eval_op, mask, read_value, OperatorTag, SymId, Term, TermKind};

use super::{Answer, Backend, Model, PathCondition, Verdict};

pub const DEFAULT_MAX_BITS: u32 = 20;

/// Row-vector memoisation is used while at most this many rows survive.
const MEMO_ROWS: usize = 256;
/// Above this many bits the packed row table costs more than slicing.
const INCREMENTAL_MAX_BITS: u32 = 12;
/// Upper bound on memoised values before the memo is dropped.
const MEMO_CAP: usize = 16 << 20;
const CHECK_EVERY: usize = 1024;

enum Ins {
    Const(u64),
    Col(usize),
    Op {
        tag: OperatorTag,
        in_w: u32,
        out_w: u32,
        args: Vec<usize>,
    },
    Read {
        offset: u64,
        iw: u32,
        idx: usize,
        cells: Vec<usize>,
        stores: Vec<(usize, usize)>,
    },
}

/// Straight-line evaluator for a set of width-1 roots over column values.
struct Program {
    ins: Vec<Ins>,
    roots: Vec<usize>,
}

impl Program {
    fn compile(roots: &[Term], col_of: &HashMap<SymId, usize>) -> Program {
        let order = Term::topo_order(roots);
        let mut slot: HashMap<usize, usize> = HashMap::with_capacity(order.len());
        let mut ins = Vec::with_capacity(order.len());
        for t in &order {
            let i = match t.kind() {
                TermKind::Const(v) => Ins::Const(*v),
                TermKind::Symbol { id, .. } => Ins::Col(col_of[id]),
                TermKind::Op { tag, args } => Ins::Op {
                    tag: *tag,
                    in_w: args[0].width(),
                    out_w: t.width(),
                    args: args.iter().map(|a| slot[&a.ptr_key()]).collect(),
                },
                TermKind::Read { .. } => {
                    let r = t.as_read().unwrap();
                    Ins::Read {
                        offset: r.offset,
                        iw: r.index.width(),
                        idx: slot[&r.index.ptr_key()],
                        cells: r.cells.iter().map(|c| slot[&c.ptr_key()]).collect(),
                        stores: r
                            .stores()
                            .map(|(i, v)| (slot[&i.ptr_key()], slot[&v.ptr_key()]))
                            .collect(),
                    }
                }
            };
            slot.insert(t.ptr_key(), ins.len());
            ins.push(i);
        }
        Program {
            roots: roots.iter().map(|r| slot[&r.ptr_key()]).collect(),
            ins,
        }
    }

    fn holds(&self, cols: &[u64], regs: &mut Vec<u64>) -> bool {
        regs.clear();
        let mut buf = [0u64; 3];
        for i in &self.ins {
            let v = match i {
                Ins::Const(v) => *v,
                Ins::Col(c) => cols[*c],
                Ins::Op { tag, in_w, out_w, args } => {
                    for (k, a) in args.iter().enumerate() {
                        buf[k] = regs[*a];
                    }
                    eval_op(*tag, *in_w, *out_w, &buf[..args.len()])
                }
                Ins::Read {
                    offset,
                    iw,
                    idx,
                    cells,
                    stores,
                } => {
                    let cv: Vec<u64> = cells.iter().map(|c| regs[*c]).collect();
                    read_value(
                        regs[*idx],
                        *iw,
                        *offset,
                        &cv,
                        stores.iter().map(|(a, b)| (regs[*a], regs[*b])),
                    )
                }
            };
            regs.push(v);
        }
        self.roots.iter().all(|r| regs[*r] == 1)
    }
}

/// Column layout of packed rows. The first column is most significant, so
/// numeric order of packed rows is symbol-id-then-value order.
#[derive(Clone, Default)]
struct Layout {
    cols: Vec<(SymId, u32)>,
    shifts: Vec<u32>,
    index: HashMap<SymId, usize>,
}

impl Layout {
    fn new(mut cols: Vec<(SymId, u32)>) -> Layout {
        cols.sort_by_key(|c| c.0);
        let mut shifts = vec![0; cols.len()];
        let mut s = 0;
        for (k, c) in cols.iter().enumerate().rev() {
            shifts[k] = s;
            s += c.1;
        }
        let index = cols.iter().enumerate().map(|(k, c)| (c.0, k)).collect();
        Layout { cols, shifts, index }
    }

    fn bits(&self) -> u32 {
        self.cols.iter().map(|c| c.1).sum()
    }

    fn unpack(&self, row: u64, out: &mut Vec<u64>) {
        out.clear();
        for (k, c) in self.cols.iter().enumerate() {
            out.push((row >> self.shifts[k]) & mask(c.1));
        }
    }

    fn pack(&self, vals: &[u64]) -> u64 {
        let mut r = 0;
        for (k, v) in vals.iter().enumerate() {
            r |= v << self.shifts[k];
        }
        r
    }

    fn model(&self, row: u64) -> Model {
        let mut vals = Vec::new();
        self.unpack(row, &mut vals);
        self.cols.iter().zip(vals).map(|(c, v)| (c.0, v)).collect()
    }
}

/// Satisfying rows of a path-condition prefix.
struct Incremental {
    pc_len: usize,
    pc_fp: u64,
    layout: Layout,
    rows: Vec<u64>,
    /// Node value per row, valid for the current `rows`.
    memo: HashMap<usize, (Term, Vec<u64>)>,
    memo_size: usize,
}

impl Incremental {
    fn empty() -> Incremental {
        Incremental {
            pc_len: 0,
            pc_fp: 0,
            layout: Layout::default(),
            rows: vec![0],
            memo: HashMap::new(),
            memo_size: 0,
        }
    }

    fn clear_memo(&mut self) {
        self.memo.clear();
        self.memo_size = 0;
    }

    /// Widens the layout with extra columns; new columns take every value.
    fn widen(&mut self, new: &[(SymId, u32)], deadline: Instant) -> bool {
        if new.is_empty() {
            return true;
        }
        let mut cols = self.layout.cols.clone();
        cols.extend_from_slice(new);
        let layout = Layout::new(cols);
        let new_bits: u32 = new.iter().map(|c| c.1).sum();
        let mut out = Vec::with_capacity(self.rows.len() << new_bits);
        let mut old_vals = Vec::new();
        let mut vals = vec![0u64; layout.cols.len()];
        let new_pos: Vec<usize> = new.iter().map(|c| layout.index[&c.0]).collect();
        for (n, &row) in self.rows.iter().enumerate() {
            if n % CHECK_EVERY == 0 && Instant::now() > deadline {
                return false;
            }
            self.layout.unpack(row, &mut old_vals);
            for (k, c) in self.layout.cols.iter().enumerate() {
                vals[layout.index[&c.0]] = old_vals[k];
            }
            for combo in 0..(1u64 << new_bits) {
                let mut rest = combo;
                for (j, c) in new.iter().enumerate() {
                    vals[new_pos[j]] = rest & mask(c.1);
                    rest >>= c.1;
                }
                out.push(layout.pack(&vals));
            }
        }
        out.sort_unstable();
        self.rows = out;
        self.layout = layout;
        self.clear_memo();
        true
    }

    /// Truth of each root per row, or None on timeout.
    fn eval_rows(&mut self, roots: &[Term], deadline: Instant) -> Option<Vec<Vec<bool>>> {
        if self.rows.len() <= MEMO_ROWS {
            return self.eval_memo(roots, deadline);
        }
        let progs: Vec<Program> = roots
            .iter()
            .map(|r| Program::compile(std::slice::from_ref(r), &self.layout.index))
            .collect();
        let mut out = vec![Vec::with_capacity(self.rows.len()); roots.len()];
        let mut vals = Vec::new();
        let mut regs = Vec::new();
        for (n, &row) in self.rows.iter().enumerate() {
            if n % CHECK_EVERY == 0 && Instant::now() > deadline {
                return None;
            }
            self.layout.unpack(row, &mut vals);
            for (k, p) in progs.iter().enumerate() {
                out[k].push(p.holds(&vals, &mut regs));
            }
        }
        Some(out)
    }

    fn eval_memo(&mut self, roots: &[Term], deadline: Instant) -> Option<Vec<Vec<bool>>> {
        let n = self.rows.len();
        let mut unpacked = Vec::with_capacity(n);
        let mut scratch = Vec::new();
        for &row in &self.rows {
            self.layout.unpack(row, &mut scratch);
            unpacked.push(scratch.clone());
        }
        // Post-order over nodes not yet memoised.
        let mut stack: Vec<(Term, bool)> = roots.iter().map(|r| (r.clone(), false)).collect();
        let mut steps = 0usize;
        while let Some((t, expanded)) = stack.pop() {
            let key = t.ptr_key();
            if self.memo.contains_key(&key) {
                continue;
            }
            if !expanded {
                stack.push((t.clone(), true));
                for c in t.children() {
                    if !self.memo.contains_key(&c.ptr_key()) {
                        stack.push((c.clone(), false));
                    }
                }
                continue;
            }
            steps += 1;
            if steps % CHECK_EVERY == 0 && Instant::now() > deadline {
                return None;
            }
            let vals: Vec<u64> = match t.kind() {
                TermKind::Const(v) => vec![*v; n],
                TermKind::Symbol { id, .. } => {
                    let c = self.layout.index[id];
                    unpacked.iter().map(|r| r[c]).collect()
                }
                TermKind::Op { tag, args } => {
                    let av: Vec<&Vec<u64>> = args.iter().map(|a| &self.memo[&a.ptr_key()].1).collect();
                    let (in_w, out_w) = (args[0].width(), t.width());
                    let mut buf = [0u64; 3];
                    (0..n)
                        .map(|r| {
                            for (k, a) in av.iter().enumerate() {
                                buf[k] = a[r];
                            }
                            eval_op(*tag, in_w, out_w, &buf[..av.len()])
                        })
                        .collect()
                }
                TermKind::Read { .. } => {
                    let rv = t.as_read().unwrap();
                    let get = |x: &Term| &self.memo[&x.ptr_key()].1;
                    let idx = get(rv.index);
                    let cells: Vec<&Vec<u64>> = rv.cells.iter().map(get).collect();
                    let stores: Vec<(&Vec<u64>, &Vec<u64>)> = rv.stores().map(|(i, v)| (get(i), get(v))).collect();
                    (0..n)
                        .map(|r| {
                            let cv: Vec<u64> = cells.iter().map(|c| c[r]).collect();
                            read_value(
                                idx[r],
                                rv.index.width(),
                                rv.offset,
                                &cv,
                                stores.iter().map(|(i, v)| (i[r], v[r])),
                            )
                        })
                        .collect()
                }
            };
            self.memo_size += n;
            self.memo.insert(key, (t.clone(), vals));
        }
        let out = roots
            .iter()
            .map(|r| self.memo[&r.ptr_key()].1.iter().map(|v| *v == 1).collect())
            .collect();
        if self.memo_size > MEMO_CAP {
            self.clear_memo();
        }
        Some(out)
    }

    /// Keeps the rows satisfying every root.
    fn narrow(&mut self, roots: &[Term], deadline: Instant) -> bool {
        if roots.is_empty() {
            return true;
        }
        let Some(truth) = self.eval_rows(roots, deadline) else {
            return false;
        };
        let keep: Vec<bool> = (0..self.rows.len()).map(|r| truth.iter().all(|t| t[r])).collect();
        if keep.iter().all(|k| *k) {
            return true;
        }
        let mut k = keep.iter();
        self.rows.retain(|_| *k.next().unwrap());
        self.clear_memo();
        true
    }
}

pub struct BuiltinBackend {
    max_bits: u32,
    inc: Option<Incremental>,
}

impl Default for BuiltinBackend {
    fn default() -> BuiltinBackend {
        BuiltinBackend::new(DEFAULT_MAX_BITS)
    }
}

impl BuiltinBackend {
    pub fn new(max_bits: u32) -> BuiltinBackend {
        BuiltinBackend {
            max_bits: max_bits.min(40),
            inc: None,
        }
    }

    pub fn max_bits(&self) -> u32 {
        self.max_bits
    }

    /// None when the incremental state cannot cover the query.
    fn check_incremental(&mut self, pc: &PathCondition, extra: &[Term], deadline: Instant) -> Option<Answer> {
        let reusable = self
            .inc
            .as_ref()
            .is_some_and(|s| s.pc_len <= pc.len() && pc.prefix_fingerprint(s.pc_len) == s.pc_fp);
        if !reusable {
            self.inc = Some(Incremental::empty());
        }
        let st = self.inc.as_mut().unwrap();
        let fresh = &pc.constraints()[st.pc_len..];
        let mut roots: Vec<Term> = fresh.to_vec();
        roots.extend_from_slice(extra);
        let new_cols: Vec<(SymId, u32)> = Term::symbols_of(&roots)
            .into_iter()
            .filter(|s| !st.layout.index.contains_key(&s.0))
            .map(|s| (s.0, s.2))
            .collect();
        let bits = st.layout.bits() + new_cols.iter().map(|c| c.1).sum::<u32>();
        if bits > self.max_bits.min(INCREMENTAL_MAX_BITS) {
            return None;
        }
        if !st.widen(&new_cols, deadline) || !st.narrow(fresh, deadline) {
            self.inc = None;
            return Some(Answer::unknown());
        }
        st.pc_len = pc.len();
        st.pc_fp = pc.fingerprint();
        let hit = if extra.is_empty() {
            st.rows.first().copied()
        } else {
            let Some(truth) = st.eval_rows(extra, deadline) else {
                return Some(Answer::unknown());
            };
            (0..st.rows.len())
                .find(|&r| truth.iter().all(|t| t[r]))
                .map(|r| st.rows[r])
        };
        Some(match hit {
            Some(row) => Answer {
                verdict: Verdict::Sat,
                model: Some(st.layout.model(row)),
            },
            None => Answer {
                verdict: Verdict::Unsat,
                model: None,
            },
        })
    }

    fn check_sliced(
        &self,
        pc: &PathCondition,
        extra: &[Term],
        want_model: bool,
        pc_known_sat: bool,
        deadline: Instant,
    ) -> Answer {
        let mut all: Vec<Term> = pc.constraints().to_vec();
        all.extend_from_slice(extra);
        let comps = components(&all, !want_model);
        let focus: HashSet<SymId> = Term::symbols_of(extra).into_iter().map(|s| s.0).collect();
        let mut model = Model::new();
        let mut unknown = false;
        for comp in comps {
            let relevant = comp.syms.iter().any(|s| focus.contains(&s.0));
            if pc_known_sat && !want_model && !relevant {
                continue;
            }
            let bits: u32 = comp.syms.iter().map(|s| s.1).sum();
            if bits > self.max_bits {
                unknown = true;
                continue;
            }
            match solve(&comp, want_model, deadline) {
                Search::Found(vals) => {
                    model.extend(comp.syms.iter().map(|s| s.0).zip(vals));
                }
                Search::Exhausted => {
                    return Answer {
                        verdict: Verdict::Unsat,
                        model: None,
                    }
                }
                Search::TimedOut => unknown = true,
            }
        }
        if unknown {
            Answer::unknown()
        } else {
            Answer {
                verdict: Verdict::Sat,
                model: want_model.then_some(model),
            }
        }
    }
}

impl Backend for BuiltinBackend {
    fn name(&self) -> &str {
        "builtin"
    }

    fn check(
        &mut self,
        pc: &PathCondition,
        extra: &[Term],
        want_model: bool,
        pc_known_sat: bool,
        timeout: Duration,
    ) -> Answer {
        let deadline = Instant::now() + timeout;
        if let Some(mut a) = self.check_incremental(pc, extra, deadline) {
            if !want_model {
                a.model = None;
            }
            return a;
        }
        self.check_sliced(pc, extra, want_model, pc_known_sat, deadline)
    }
}

struct Component {
    syms: Vec<(SymId, u32)>,
    all: Vec<Term>,
    /// Constraints grouped by the position of their last symbol.
    by_depth: Vec<Vec<Term>>,
}

/// Groups constraints that share symbols, transitively. Columns follow
/// symbol id, which makes the first model found the lex-least one; with
/// `shared_first` the symbols occurring in most constraints come first
/// instead, so constraints are checked at shallower depth.
fn components(constraints: &[Term], shared_first: bool) -> Vec<Component> {
    let syms: Vec<Vec<(SymId, u32)>> = constraints
        .iter()
        .map(|c| Term::symbols_of(std::slice::from_ref(c)).into_iter().map(|s| (s.0, s.2)).collect())
        .collect();
    let mut parent: HashMap<SymId, SymId> = HashMap::new();
    fn find(p: &mut HashMap<SymId, SymId>, x: SymId) -> SymId {
        let mut r = x;
        while p[&r] != r {
            r = p[&r];
        }
        let mut y = x;
        while p[&y] != r {
            let next = p[&y];
            p.insert(y, r);
            y = next;
        }
        r
    }
    for ss in &syms {
        for s in ss {
            parent.entry(s.0).or_insert(s.0);
        }
        for w in ss.windows(2) {
            let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
            if a != b {
                parent.insert(a.max(b), a.min(b));
            }
        }
    }
    let mut groups: HashMap<SymId, (Vec<(SymId, u32)>, Vec<usize>)> = HashMap::new();
    let mut widths: HashMap<SymId, u32> = HashMap::new();
    for ss in &syms {
        widths.extend(ss.iter().copied());
    }
    let mut ids: Vec<SymId> = widths.keys().copied().collect();
    ids.sort();
    for id in ids {
        let r = find(&mut parent, id);
        groups.entry(r).or_default().0.push((id, widths[&id]));
    }
    for (k, ss) in syms.iter().enumerate() {
        if let Some(s) = ss.first() {
            let r = find(&mut parent, s.0);
            groups.get_mut(&r).unwrap().1.push(k);
        }
    }
    let mut roots: Vec<SymId> = groups.keys().copied().collect();
    roots.sort();
    roots
        .into_iter()
        .map(|r| {
            let (mut cols, members) = groups.remove(&r).unwrap();
            if shared_first {
                let mut uses: HashMap<SymId, usize> = HashMap::new();
                for &k in &members {
                    for sy in &syms[k] {
                        *uses.entry(sy.0).or_default() += 1;
                    }
                }
                cols.sort_by_key(|c| (std::cmp::Reverse(uses[&c.0]), c.0));
            }
            let pos: HashMap<SymId, usize> = cols.iter().enumerate().map(|(k, c)| (c.0, k)).collect();
            let mut by_depth = vec![Vec::new(); cols.len()];
            let all = members.iter().map(|&k| constraints[k].clone()).collect();
            for k in members {
                let last = syms[k].iter().map(|s| pos[&s.0]).max().unwrap();
                by_depth[last].push(constraints[k].clone());
            }
            Component { syms: cols, all, by_depth }
        })
        .collect()
}

/// Components up to this many bits are searched directly.
const SPLIT_BITS: u32 = 16;

/// Like `search`, but wide components are first split: the most shared
/// symbol is fixed value by value and what remains is sliced again. With
/// `want_model` the lex-least model is then built one symbol at a time.
fn solve(comp: &Component, want_model: bool, deadline: Instant) -> Search {
    let bits: u32 = comp.syms.iter().map(|s| s.1).sum();
    if bits <= SPLIT_BITS {
        return search(comp, deadline);
    }
    match split_sat(&comp.all, deadline) {
        Search::Found(_) if want_model => {}
        r => return r,
    }
    let mut fixed: HashMap<SymId, Term> = HashMap::new();
    let mut vals = Vec::with_capacity(comp.syms.len());
    for &(id, w) in &comp.syms {
        let mut found = None;
        for v in 0..=mask(w) {
            fixed.insert(id, Term::lit(w, v));
            let Some(cs) = substitute_all(&comp.all, &fixed) else {
                return Search::TimedOut;
            };
            match split_sat(&cs, deadline) {
                Search::Found(_) => {
                    found = Some(v);
                    break;
                }
                Search::Exhausted => {}
                Search::TimedOut => return Search::TimedOut,
            }
        }
        match found {
            Some(v) => vals.push(v),
            // Cannot happen after a satisfiable split_sat; treat as undecided.
            None => return Search::TimedOut,
        }
    }
    Search::Found(vals)
}

fn substitute_all(cs: &[Term], map: &HashMap<SymId, Term>) -> Option<Vec<Term>> {
    cs.iter().map(|c| c.substitute(map).ok()).collect()
}

/// Satisfiability only; a found result carries no values.
fn split_sat(cs: &[Term], deadline: Instant) -> Search {
    if cs.iter().any(Term::is_false) {
        return Search::Exhausted;
    }
    let live: Vec<Term> = cs.iter().filter(|c| !c.is_true()).cloned().collect();
    for comp in components(&live, true) {
        let bits: u32 = comp.syms.iter().map(|s| s.1).sum();
        let r = if bits <= SPLIT_BITS {
            search(&comp, deadline)
        } else {
            split_on_first(&comp, deadline)
        };
        match r {
            Search::Found(_) => {}
            other => return other,
        }
        if Instant::now() > deadline {
            return Search::TimedOut;
        }
    }
    Search::Found(Vec::new())
}

/// Fixes the component's first column (its most shared symbol).
fn split_on_first(comp: &Component, deadline: Instant) -> Search {
    let (id, w) = comp.syms[0];
    for v in 0..=mask(w) {
        let map = HashMap::from([(id, Term::lit(w, v))]);
        let Some(cs) = substitute_all(&comp.all, &map) else {
            return Search::TimedOut;
        };
        match split_sat(&cs, deadline) {
            Search::Exhausted => {}
            r => return r,
        }
    }
    Search::Exhausted
}

enum Search {
    Found(Vec<u64>),
    Exhausted,
    TimedOut,
}

/// Depth-first search in ascending value order; constraints are checked as
/// soon as all their symbols are assigned.
fn search(comp: &Component, deadline: Instant) -> Search {
    let n = comp.syms.len();
    let col_of: HashMap<SymId, usize> = comp.syms.iter().enumerate().map(|(k, s)| (s.0, k)).collect();
    let progs: Vec<Option<Program>> = comp
        .by_depth
        .iter()
        .map(|cs| (!cs.is_empty()).then(|| Program::compile(cs, &col_of)))
        .collect();
    let mut vals = vec![0u64; n];
    let mut regs = Vec::new();
    let mut depth = 0usize;
    let mut fresh = true;
    let mut steps = 0usize;
    loop {
        if !fresh {
            // Advance the value at `depth`, backtracking when exhausted.
            loop {
                if vals[depth] == mask(comp.syms[depth].1) {
                    vals[depth] = 0;
                    if depth == 0 {
                        return Search::Exhausted;
                    }
                    depth -= 1;
                } else {
                    vals[depth] += 1;
                    break;
                }
            }
        }
        steps += 1;
        if steps % CHECK_EVERY == 0 && Instant::now() > deadline {
            return Search::TimedOut;
        }
        let ok = progs[depth].as_ref().map_or(true, |p| p.holds(&vals, &mut regs));
        if !ok {
            fresh = false;
            continue;
        }
        if depth + 1 == n {
            return Search::Found(vals);
        }
        depth += 1;
        vals[depth] = 0;
        fresh = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::SymbolTable;

    fn c(w: u32, v: u64) -> Term {
        Term::lit(w, v)
    }

    const T: Duration = Duration::from_secs(10);

    #[test]
    fn incremental_and_sliced_agree() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 4).unwrap();
        let b = st.declare("b", 4).unwrap();
        let pc = PathCondition::from_constraints([
            b.ult(&a).unwrap(),
            a.add(&b).unwrap().eq(&c(4, 9)).unwrap(),
        ])
        .unwrap();
        let extra = [b.ugt(&c(4, 1)).unwrap()];
        let mut inc = BuiltinBackend::default();
        let x = inc.check(&pc, &extra, true, false, T);
        let y = BuiltinBackend::default().check_sliced(&pc, &extra, true, false, Instant::now() + T);
        assert_eq!(x, y);
        assert_eq!(x.model.unwrap().values().copied().collect::<Vec<_>>(), vec![5, 4]);
    }

    #[test]
    fn incremental_reuses_prefix() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 8).unwrap();
        let mut be = BuiltinBackend::default();
        let mut pc = PathCondition::new();
        pc.push(a.ugt(&c(8, 100)).unwrap()).unwrap();
        assert_eq!(be.check(&pc, &[], false, false, T).verdict, Verdict::Sat);
        pc.push(a.ult(&c(8, 110)).unwrap()).unwrap();
        let r = be.check(&pc, &[a.eq(&c(8, 105)).unwrap()], true, true, T);
        assert_eq!(r.model.unwrap()[&SymId(0)], 105);
        assert_eq!(be.inc.as_ref().unwrap().rows.len(), 9);
    }

    #[test]
    fn over_budget_component_is_unknown() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 32).unwrap();
        let b = st.declare("b", 4).unwrap();
        let r = BuiltinBackend::default().check(
            &PathCondition::new(),
            &[a.eq(&c(32, 5)).unwrap()],
            false,
            false,
            T,
        );
        assert_eq!(r.verdict, Verdict::Unknown);
        // An unsatisfiable small component still decides the query.
        let pc = PathCondition::from_constraints([a.eq(&c(32, 5)).unwrap()]).unwrap();
        let r = BuiltinBackend::default().check(
            &pc,
            &[b.ult(&c(4, 0)).unwrap().not().unwrap().not().unwrap()],
            false,
            false,
            T,
        );
        assert_eq!(r.verdict, Verdict::Unsat);
    }

    #[test]
    fn known_sat_skips_unrelated_components() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 32).unwrap();
        let b = st.declare("b", 4).unwrap();
        let pc = PathCondition::from_constraints([a.ugt(&c(32, 5)).unwrap()]).unwrap();
        let r = BuiltinBackend::default().check(&pc, &[b.eq(&c(4, 3)).unwrap()], false, true, T);
        assert_eq!(r.verdict, Verdict::Sat);
    }

    #[test]
    fn reads_are_enumerated() {
        let mut st = SymbolTable::new();
        let i = st.declare("i", 3).unwrap();
        let cells: Vec<Term> = (0..4).map(|k| c(8, 10 + k)).collect();
        let r = Term::array_read(&i, 2, &cells, &[]).unwrap();
        let q = [r.eq(&c(8, 12)).unwrap()];
        let ans = BuiltinBackend::default().check(&PathCondition::new(), &q, true, false, T);
        assert_eq!(ans.model.unwrap()[&SymId(0)], 4);
        let q = [r.eq(&c(8, 99)).unwrap()];
        let ans = BuiltinBackend::new(0).check(&PathCondition::new(), &q, true, false, T);
        assert_eq!(ans.verdict, Verdict::Unknown);
    }
}
