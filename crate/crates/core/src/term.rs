//! Width-annotated bitvector expression trees.
//!
//! A [`Term`] is an immutable, reference-counted node. Construction folds any
//! operator whose operands are all constants, plus a small fixed set of
//! syntactic identities, so a term without symbols is always a single
//! constant node.
//!
//! Terms built by long-running symbolic loops can be very deep (one node per
//! iteration), so every traversal in this module is iterative.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

pub const MAX_WIDTH: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("width {0} outside [1, 64]")]
    Width(u32),
    #[error("constant {value} does not fit in {width} bits")]
    Overflow { width: u32, value: u64 },
    #[error("{tag} expects {expected} operand(s), got {got}")]
    Arity {
        tag: OperatorTag,
        expected: usize,
        got: usize,
    },
    #[error("{tag}: operand widths {widths:?} are incompatible")]
    Mismatch { tag: OperatorTag, widths: Vec<u32> },
    #[error("symbol name must not be empty")]
    EmptyName,
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
}

/// Identifier of a symbolic variable, unique within one test execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymId(pub u32);

/// Operator class; mutation replaces operators only within a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpClass {
    Arithmetic,
    Bitwise,
    Shift,
    Relational,
    Structural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorTag {
    Add,
    Sub,
    Mul,
    Udiv,
    Urem,
    And,
    Or,
    Xor,
    Not,
    Shl,
    Lshr,
    Ashr,
    Eq,
    Ne,
    Ult,
    Ule,
    Slt,
    Sle,
    Ite,
    Zext(u32),
    Sext(u32),
    Extract { hi: u32, lo: u32 },
    Concat,
}

impl OperatorTag {
    pub fn class(self) -> OpClass {
        use OperatorTag::*;
        match self {
            Add | Sub | Mul | Udiv | Urem => OpClass::Arithmetic,
            And | Or | Xor | Not => OpClass::Bitwise,
            Shl | Lshr | Ashr => OpClass::Shift,
            Eq | Ne | Ult | Ule | Slt | Sle => OpClass::Relational,
            Ite | Zext(_) | Sext(_) | Extract { .. } | Concat => OpClass::Structural,
        }
    }

    pub fn arity(self) -> usize {
        use OperatorTag::*;
        match self {
            Not | Zext(_) | Sext(_) | Extract { .. } => 1,
            Ite => 3,
            _ => 2,
        }
    }

    /// All parameter-free tags of a class, in declaration order.
    pub fn class_members(class: OpClass) -> &'static [OperatorTag] {
        use OperatorTag::*;
        match class {
            OpClass::Arithmetic => &[Add, Sub, Mul, Udiv, Urem],
            OpClass::Bitwise => &[And, Or, Xor, Not],
            OpClass::Shift => &[Shl, Lshr, Ashr],
            OpClass::Relational => &[Eq, Ne, Ult, Ule, Slt, Sle],
            OpClass::Structural => &[Ite, Concat],
        }
    }

    pub fn name(self) -> &'static str {
        use OperatorTag::*;
        match self {
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            Udiv => "udiv",
            Urem => "urem",
            And => "and",
            Or => "or",
            Xor => "xor",
            Not => "not",
            Shl => "shl",
            Lshr => "lshr",
            Ashr => "ashr",
            Eq => "eq",
            Ne => "ne",
            Ult => "ult",
            Ule => "ule",
            Slt => "slt",
            Sle => "sle",
            Ite => "ite",
            Zext(_) => "zext",
            Sext(_) => "sext",
            Extract { .. } => "extract",
            Concat => "concat",
        }
    }

    pub fn from_name(name: &str) -> Option<OperatorTag> {
        use OperatorTag::*;
        Some(match name {
            "add" => Add,
            "sub" => Sub,
            "mul" => Mul,
            "udiv" => Udiv,
            "urem" => Urem,
            "and" => And,
            "or" => Or,
            "xor" => Xor,
            "not" => Not,
            "shl" => Shl,
            "lshr" => Lshr,
            "ashr" => Ashr,
            "eq" => Eq,
            "ne" => Ne,
            "ult" => Ult,
            "ule" => Ule,
            "slt" => Slt,
            "sle" => Sle,
            "ite" => Ite,
            "concat" => Concat,
            _ => return None,
        })
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorTag::Zext(w) => write!(f, "zext{w}"),
            OperatorTag::Sext(w) => write!(f, "sext{w}"),
            OperatorTag::Extract { hi, lo } => write!(f, "extract[{hi}:{lo}]"),
            t => f.write_str(t.name()),
        }
    }
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

fn to_signed(v: u64, width: u32) -> i64 {
    let shift = 64 - width;
    ((v << shift) as i64) >> shift
}

/// Applies `tag` to concrete operands. `in_width` is the width of the first
/// operand, `out_width` the result width. Semantics follow SMT-LIB: division by
/// zero gives all-ones, remainder by zero gives the dividend, shifts by at least
/// the width saturate.
pub fn eval_op(tag: OperatorTag, in_width: u32, out_width: u32, args: &[u64]) -> u64 {
    use OperatorTag::*;
    let m = mask(in_width);
    let a = args[0];
    let b = args.get(1).copied().unwrap_or(0);
    let r = match tag {
        Add => a.wrapping_add(b),
        Sub => a.wrapping_sub(b),
        Mul => a.wrapping_mul(b),
        Udiv => {
            if b == 0 {
                m
            } else {
                a / b
            }
        }
        Urem => {
            if b == 0 {
                a
            } else {
                a % b
            }
        }
        And => a & b,
        Or => a | b,
        Xor => a ^ b,
        Not => !a,
        Shl => {
            if b >= in_width as u64 {
                0
            } else {
                a << b
            }
        }
        Lshr => {
            if b >= in_width as u64 {
                0
            } else {
                a >> b
            }
        }
        Ashr => {
            let amt = if b >= in_width as u64 { in_width - 1 } else { b as u32 };
            (to_signed(a, in_width) >> amt) as u64
        }
        Eq => (a == b) as u64,
        Ne => (a != b) as u64,
        Ult => (a < b) as u64,
        Ule => (a <= b) as u64,
        Slt => (to_signed(a, in_width) < to_signed(b, in_width)) as u64,
        Sle => (to_signed(a, in_width) <= to_signed(b, in_width)) as u64,
        Ite => {
            if a & 1 == 1 {
                b
            } else {
                args[2]
            }
        }
        Zext(_) => a,
        Sext(_) => to_signed(a, in_width) as u64,
        Extract { lo, .. } => a >> lo,
        Concat => {
            // args[1] is the low part; its width is out_width - in_width.
            let low_width = out_width - in_width;
            (a << low_width) | b
        }
    };
    r & mask(out_width)
}

#[derive(Clone)]
pub struct Term(Arc<Node>);

pub struct Node {
    width: u32,
    hash: u64,
    /// Symbols below this node, sorted by id; None when there are none.
    syms: Option<SymSet>,
    has_read: bool,
    kind: TermKind,
}

type SymSet = Arc<[(SymId, u32, Arc<str>)]>;

/// Sorted union of child symbol sets, reusing a child's set when it already
/// covers the union (the common case for long chains).
fn union_syms(children: &[Term]) -> Option<SymSet> {
    let mut best: Option<&SymSet> = None;
    let mut distinct = 0;
    for c in children {
        if let Some(s) = &c.0.syms {
            match best {
                Some(b) if Arc::ptr_eq(b, s) => {}
                Some(b) => {
                    distinct += 1;
                    if s.len() > b.len() {
                        best = Some(s);
                    }
                }
                None => {
                    distinct = 1;
                    best = Some(s);
                }
            }
        }
    }
    let best = best?;
    if distinct == 1 {
        return Some(best.clone());
    }
    let mut all: Vec<(SymId, u32, Arc<str>)> = children
        .iter()
        .filter_map(|c| c.0.syms.as_ref())
        .flat_map(|s| s.iter().cloned())
        .collect();
    all.sort_by_key(|e| e.0);
    all.dedup_by_key(|e| e.0);
    if all.len() == best.len() {
        return Some(best.clone());
    }
    Some(Arc::from(all))
}

pub enum TermKind {
    Const(u64),
    Symbol { id: SymId, name: Arc<str> },
    Op { tag: OperatorTag, args: Vec<Term> },
    /// Select from an array literal with stores applied. `args` holds the
    /// select index, then `ncells` literal cells for addresses
    /// `offset..offset+ncells`, then (index, value) store pairs in order.
    /// Addresses outside the literal read as zero.
    Read { offset: u64, ncells: usize, args: Vec<Term> },
}

impl Drop for Node {
    fn drop(&mut self) {
        let mut stack = Vec::new();
        self.kind.take_children(&mut stack);
        while let Some(t) = stack.pop() {
            if let Ok(mut node) = Arc::try_unwrap(t.0) {
                node.kind.take_children(&mut stack);
            }
        }
    }
}

impl TermKind {
    fn take_children(&mut self, out: &mut Vec<Term>) {
        match self {
            TermKind::Op { args, .. } | TermKind::Read { args, .. } => out.append(args),
            _ => {}
        }
    }
}

/// Borrowed view of an array read node.
pub struct ReadView<'a> {
    pub offset: u64,
    pub index: &'a Term,
    pub cells: &'a [Term],
    stores: &'a [Term],
}

impl<'a> ReadView<'a> {
    pub fn stores(&self) -> impl Iterator<Item = (&'a Term, &'a Term)> + 'a {
        self.stores.chunks(2).map(|p| (&p[0], &p[1]))
    }

    pub fn store_count(&self) -> usize {
        self.stores.len() / 2
    }
}

fn hasher() -> DefaultHasher {
    DefaultHasher::new()
}

impl Term {
    fn from_kind(width: u32, kind: TermKind) -> Term {
        let mut h = hasher();
        width.hash(&mut h);
        match &kind {
            TermKind::Const(v) => {
                0u8.hash(&mut h);
                v.hash(&mut h);
            }
            TermKind::Symbol { id, name } => {
                1u8.hash(&mut h);
                id.hash(&mut h);
                name.hash(&mut h);
            }
            TermKind::Op { tag, args } => {
                2u8.hash(&mut h);
                tag.hash(&mut h);
                for a in args {
                    a.0.hash.hash(&mut h);
                }
            }
            TermKind::Read { offset, ncells, args } => {
                3u8.hash(&mut h);
                offset.hash(&mut h);
                ncells.hash(&mut h);
                for a in args {
                    a.0.hash.hash(&mut h);
                }
            }
        }
        let (syms, has_read) = match &kind {
            TermKind::Const(_) => (None, false),
            TermKind::Symbol { id, name } => (Some(Arc::from(vec![(*id, width, name.clone())])), false),
            TermKind::Op { args, .. } => (union_syms(args), args.iter().any(|a| a.0.has_read)),
            TermKind::Read { args, .. } => (union_syms(args), true),
        };
        Term(Arc::new(Node {
            width,
            hash: h.finish(),
            syms,
            has_read,
            kind,
        }))
    }

    pub fn constant(width: u32, value: u64) -> Result<Term, TermError> {
        if width == 0 || width > MAX_WIDTH {
            return Err(TermError::Width(width));
        }
        if value & !mask(width) != 0 {
            return Err(TermError::Overflow { width, value });
        }
        Ok(Term::from_kind(width, TermKind::Const(value)))
    }

    /// Constant with the value truncated to `width` bits.
    ///
    /// Panics if `width` is outside [1, 64].
    pub fn lit(width: u32, value: u64) -> Term {
        Term::constant(width, value & mask(width)).expect("literal width")
    }

    pub fn bool(b: bool) -> Term {
        Term::lit(1, b as u64)
    }

    /// Low-level symbol constructor. Prefer [`SymbolTable::declare`], which
    /// enforces name uniqueness and hands out ids.
    pub fn symbol(id: SymId, name: &str, width: u32) -> Result<Term, TermError> {
        if name.is_empty() {
            return Err(TermError::EmptyName);
        }
        if width == 0 || width > MAX_WIDTH {
            return Err(TermError::Width(width));
        }
        Ok(Term::from_kind(
            width,
            TermKind::Symbol {
                id,
                name: Arc::from(name),
            },
        ))
    }

    pub fn width(&self) -> u32 {
        self.0.width
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.0.kind {
            TermKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        self.as_const().is_some()
    }

    pub fn is_true(&self) -> bool {
        self.width() == 1 && self.as_const() == Some(1)
    }

    pub fn is_false(&self) -> bool {
        self.width() == 1 && self.as_const() == Some(0)
    }

    pub fn as_symbol(&self) -> Option<(SymId, &str)> {
        match &self.0.kind {
            TermKind::Symbol { id, name } => Some((*id, name)),
            _ => None,
        }
    }

    pub fn as_op(&self) -> Option<(OperatorTag, &[Term])> {
        match &self.0.kind {
            TermKind::Op { tag, args } => Some((*tag, args)),
            _ => None,
        }
    }

    pub fn as_read(&self) -> Option<ReadView<'_>> {
        match &self.0.kind {
            TermKind::Read { offset, ncells, args } => Some(ReadView {
                offset: *offset,
                index: &args[0],
                cells: &args[1..1 + ncells],
                stores: &args[1 + ncells..],
            }),
            _ => None,
        }
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn children(&self) -> &[Term] {
        match &self.0.kind {
            TermKind::Op { args, .. } | TermKind::Read { args, .. } => args,
            _ => &[],
        }
    }

    /// Builds `tag(operands)`, folding constants and the identities
    /// eq(x,x)=1, xor(x,x)=0, and(x,x)=x, or(x,x)=x, sub(x,x)=0.
    pub fn apply(tag: OperatorTag, operands: &[Term]) -> Result<Term, TermError> {
        use OperatorTag::*;
        if operands.len() != tag.arity() {
            return Err(TermError::Arity {
                tag,
                expected: tag.arity(),
                got: operands.len(),
            });
        }
        let widths: Vec<u32> = operands.iter().map(Term::width).collect();
        let mismatch = || TermError::Mismatch {
            tag,
            widths: widths.clone(),
        };
        let out_width = match tag {
            Add | Sub | Mul | Udiv | Urem | And | Or | Xor | Shl | Lshr | Ashr => {
                if widths[0] != widths[1] {
                    return Err(mismatch());
                }
                widths[0]
            }
            Not => widths[0],
            Eq | Ne | Ult | Ule | Slt | Sle => {
                if widths[0] != widths[1] {
                    return Err(mismatch());
                }
                1
            }
            Ite => {
                if widths[0] != 1 || widths[1] != widths[2] {
                    return Err(mismatch());
                }
                widths[1]
            }
            Zext(w) | Sext(w) => {
                if w < widths[0] || w > MAX_WIDTH {
                    return Err(mismatch());
                }
                w
            }
            Extract { hi, lo } => {
                if hi < lo || hi >= widths[0] {
                    return Err(mismatch());
                }
                hi - lo + 1
            }
            Concat => {
                let w = widths[0] + widths[1];
                if w > MAX_WIDTH {
                    return Err(mismatch());
                }
                w
            }
        };

        if let Some(vals) = operands.iter().map(Term::as_const).collect::<Option<Vec<_>>>() {
            let v = eval_op(tag, widths[0], out_width, &vals);
            return Ok(Term::from_kind(out_width, TermKind::Const(v)));
        }

        if tag.arity() == 2 && operands[0] == operands[1] {
            match tag {
                Eq => return Ok(Term::bool(true)),
                Xor | Sub => return Ok(Term::lit(out_width, 0)),
                And | Or => return Ok(operands[0].clone()),
                _ => {}
            }
        }

        Ok(Term::from_kind(
            out_width,
            TermKind::Op {
                tag,
                args: operands.to_vec(),
            },
        ))
    }

    /// Select at `index` from a literal covering addresses
    /// `offset..offset+cells.len()` after applying `stores` in order.
    pub fn array_read(
        index: &Term,
        offset: u64,
        cells: &[Term],
        stores: &[(Term, Term)],
    ) -> Result<Term, TermError> {
        let iw = index.width();
        for c in cells {
            if c.width() != 8 {
                return Err(TermError::Mismatch {
                    tag: OperatorTag::Concat,
                    widths: vec![c.width()],
                });
            }
        }
        for (i, v) in stores {
            if i.width() != iw || v.width() != 8 {
                return Err(TermError::Mismatch {
                    tag: OperatorTag::Concat,
                    widths: vec![i.width(), v.width()],
                });
            }
        }
        let all_const = index.is_const()
            && cells.iter().all(Term::is_const)
            && stores.iter().all(|(i, v)| i.is_const() && v.is_const());
        if all_const {
            let v = read_value(
                index.as_const().unwrap(),
                iw,
                offset,
                &cells.iter().map(|c| c.as_const().unwrap()).collect::<Vec<_>>(),
                stores
                    .iter()
                    .map(|(i, v)| (i.as_const().unwrap(), v.as_const().unwrap())),
            );
            return Ok(Term::lit(8, v));
        }
        let mut args = Vec::with_capacity(1 + cells.len() + 2 * stores.len());
        args.push(index.clone());
        args.extend(cells.iter().cloned());
        for (i, v) in stores {
            args.push(i.clone());
            args.push(v.clone());
        }
        Ok(Term::from_kind(
            8,
            TermKind::Read {
                offset,
                ncells: cells.len(),
                args,
            },
        ))
    }

    pub fn binary(tag: OperatorTag, a: &Term, b: &Term) -> Result<Term, TermError> {
        Term::apply(tag, &[a.clone(), b.clone()])
    }

    pub fn add(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Add, self, o)
    }
    pub fn sub(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Sub, self, o)
    }
    pub fn mul(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Mul, self, o)
    }
    pub fn udiv(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Udiv, self, o)
    }
    pub fn urem(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Urem, self, o)
    }
    pub fn and(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::And, self, o)
    }
    pub fn or(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Or, self, o)
    }
    pub fn xor(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Xor, self, o)
    }
    pub fn not(&self) -> Result<Term, TermError> {
        Term::apply(OperatorTag::Not, &[self.clone()])
    }
    pub fn shl(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Shl, self, o)
    }
    pub fn lshr(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Lshr, self, o)
    }
    pub fn eq(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Eq, self, o)
    }
    pub fn ne(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Ne, self, o)
    }
    pub fn ult(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Ult, self, o)
    }
    pub fn ule(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Ule, self, o)
    }
    pub fn ugt(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Ult, o, self)
    }
    pub fn uge(&self, o: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Ule, o, self)
    }
    pub fn ite(&self, then: &Term, els: &Term) -> Result<Term, TermError> {
        Term::apply(OperatorTag::Ite, &[self.clone(), then.clone(), els.clone()])
    }
    pub fn zext(&self, width: u32) -> Result<Term, TermError> {
        if width == self.width() {
            return Ok(self.clone());
        }
        Term::apply(OperatorTag::Zext(width), &[self.clone()])
    }
    pub fn sext(&self, width: u32) -> Result<Term, TermError> {
        Term::apply(OperatorTag::Sext(width), &[self.clone()])
    }
    pub fn extract(&self, hi: u32, lo: u32) -> Result<Term, TermError> {
        if lo == 0 && hi + 1 == self.width() {
            return Ok(self.clone());
        }
        Term::apply(OperatorTag::Extract { hi, lo }, &[self.clone()])
    }
    pub fn concat(&self, low: &Term) -> Result<Term, TermError> {
        Term::binary(OperatorTag::Concat, self, low)
    }

    /// Nodes of the DAG rooted at the given terms in post-order (children
    /// before parents), each node once.
    pub fn topo_order(roots: &[Term]) -> Vec<Term> {
        let mut seen: HashSet<usize> = HashSet::new();
        let mut order = Vec::new();
        let mut stack: Vec<(Term, bool)> = roots.iter().rev().map(|t| (t.clone(), false)).collect();
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if !seen.insert(t.ptr_key()) {
                continue;
            }
            stack.push((t.clone(), true));
            for c in t.children().iter().rev() {
                if !seen.contains(&c.ptr_key()) {
                    stack.push((c.clone(), false));
                }
            }
        }
        order
    }

    /// Symbols occurring in `roots`, sorted by id.
    pub fn symbols_of(roots: &[Term]) -> Vec<(SymId, Arc<str>, u32)> {
        let mut out: Vec<(SymId, Arc<str>, u32)> = Vec::new();
        for r in roots {
            if let Some(set) = &r.0.syms {
                out.extend(set.iter().map(|(id, w, n)| (*id, n.clone(), *w)));
            }
        }
        out.sort_by_key(|s| s.0);
        out.dedup_by_key(|s| s.0);
        out
    }

    /// True when some array read occurs below this node.
    pub fn has_read(&self) -> bool {
        self.0.has_read
    }

    pub fn has_symbols(&self) -> bool {
        self.0.syms.is_some()
    }

    pub fn node_count(roots: &[Term]) -> usize {
        Term::topo_order(roots).len()
    }

    /// Evaluates under `env` (symbol id to value); unassigned symbols read 0.
    pub fn eval(&self, env: &HashMap<SymId, u64>) -> u64 {
        let order = Term::topo_order(std::slice::from_ref(self));
        let mut vals: HashMap<usize, u64> = HashMap::with_capacity(order.len());
        for t in &order {
            let v = match &t.0.kind {
                TermKind::Const(v) => *v,
                TermKind::Symbol { id, .. } => env.get(id).copied().unwrap_or(0) & mask(t.width()),
                TermKind::Op { tag, args } => {
                    let a: Vec<u64> = args.iter().map(|c| vals[&c.ptr_key()]).collect();
                    eval_op(*tag, args[0].width(), t.width(), &a)
                }
                TermKind::Read { .. } => {
                    let r = t.as_read().unwrap();
                    let cells: Vec<u64> = r.cells.iter().map(|c| vals[&c.ptr_key()]).collect();
                    let stores: Vec<(u64, u64)> = r
                        .stores()
                        .map(|(i, v)| (vals[&i.ptr_key()], vals[&v.ptr_key()]))
                        .collect();
                    read_value(
                        vals[&r.index.ptr_key()],
                        r.index.width(),
                        r.offset,
                        &cells,
                        stores.into_iter(),
                    )
                }
            };
            vals.insert(t.ptr_key(), v);
        }
        vals[&self.ptr_key()]
    }

    /// Replaces symbols by the mapped terms and re-folds.
    pub fn substitute(&self, map: &HashMap<SymId, Term>) -> Result<Term, TermError> {
        let order = Term::topo_order(std::slice::from_ref(self));
        let mut done: HashMap<usize, Term> = HashMap::with_capacity(order.len());
        for t in &order {
            let new = match &t.0.kind {
                TermKind::Const(_) => t.clone(),
                TermKind::Symbol { id, .. } => map.get(id).cloned().unwrap_or_else(|| t.clone()),
                TermKind::Op { tag, args } => {
                    let a: Vec<Term> = args.iter().map(|c| done[&c.ptr_key()].clone()).collect();
                    Term::apply(*tag, &a)?
                }
                TermKind::Read { .. } => {
                    let r = t.as_read().unwrap();
                    let cells: Vec<Term> = r.cells.iter().map(|c| done[&c.ptr_key()].clone()).collect();
                    let stores: Vec<(Term, Term)> = r
                        .stores()
                        .map(|(i, v)| (done[&i.ptr_key()].clone(), done[&v.ptr_key()].clone()))
                        .collect();
                    Term::array_read(&done[&r.index.ptr_key()], r.offset, &cells, &stores)?
                }
            };
            done.insert(t.ptr_key(), new);
        }
        Ok(done[&self.ptr_key()].clone())
    }
}

/// Concrete select semantics shared by folding and evaluation.
pub fn read_value(
    index: u64,
    index_width: u32,
    offset: u64,
    cells: &[u64],
    stores: impl DoubleEndedIterator<Item = (u64, u64)>,
) -> u64 {
    let mut hit = None;
    for (i, v) in stores.rev() {
        if i == index {
            hit = Some(v);
            break;
        }
    }
    if let Some(v) = hit {
        return v;
    }
    let rel = index.wrapping_sub(offset) & mask(index_width);
    if (rel as usize) < cells.len() {
        cells[rel as usize]
    } else {
        0
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        let mut visited: HashSet<(usize, usize)> = HashSet::new();
        let mut stack = vec![(self.clone(), other.clone())];
        while let Some((a, b)) = stack.pop() {
            if a.ptr_eq(&b) || !visited.insert((a.ptr_key(), b.ptr_key())) {
                continue;
            }
            if a.0.hash != b.0.hash || a.0.width != b.0.width {
                return false;
            }
            let shallow = match (&a.0.kind, &b.0.kind) {
                (TermKind::Const(x), TermKind::Const(y)) => x == y,
                (TermKind::Symbol { id: i, name: n }, TermKind::Symbol { id: j, name: m }) => {
                    i == j && n == m
                }
                (TermKind::Op { tag: s, args: x }, TermKind::Op { tag: t, args: y }) => {
                    s == t && x.len() == y.len()
                }
                (
                    TermKind::Read {
                        offset: o1,
                        ncells: n1,
                        args: x,
                    },
                    TermKind::Read {
                        offset: o2,
                        ncells: n2,
                        args: y,
                    },
                ) => o1 == o2 && n1 == n2 && x.len() == y.len(),
                _ => false,
            };
            if !shallow {
                return false;
            }
            for (x, y) in a.children().iter().zip(b.children()) {
                stack.push((x.clone(), y.clone()));
            }
        }
        true
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Term, f: &mut fmt::Formatter<'_>, budget: &mut usize) -> fmt::Result {
            if *budget == 0 {
                return f.write_str("…");
            }
            *budget -= 1;
            match &t.0.kind {
                TermKind::Const(v) => write!(f, "{v}:{}", t.width()),
                TermKind::Symbol { name, .. } => f.write_str(name),
                TermKind::Op { tag, args } => {
                    write!(f, "({tag}")?;
                    for a in args {
                        f.write_str(" ")?;
                        go(a, f, budget)?;
                    }
                    f.write_str(")")
                }
                TermKind::Read { .. } => {
                    let r = t.as_read().unwrap();
                    write!(f, "(select@{}[{} cells, {} stores] ", r.offset, r.cells.len(), r.store_count())?;
                    go(r.index, f, budget)?;
                    f.write_str(")")
                }
            }
        }
        let mut budget = 64;
        go(self, f, &mut budget)
    }
}

/// Declared symbols of one test execution. Ids are handed out in declaration
/// order, so re-executing a test yields the same ids.
#[derive(Debug, Default, Clone)]
pub struct SymbolTable {
    symbols: Vec<(String, u32, Term)>,
    by_name: HashMap<String, SymId>,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable::default()
    }

    pub fn declare(&mut self, name: &str, width: u32) -> Result<Term, TermError> {
        if self.by_name.contains_key(name) {
            return Err(TermError::DuplicateSymbol(name.to_string()));
        }
        let id = SymId(self.symbols.len() as u32);
        let t = Term::symbol(id, name, width)?;
        self.by_name.insert(name.to_string(), id);
        self.symbols.push((name.to_string(), width, t.clone()));
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<&Term> {
        self.by_name.get(name).map(|id| &self.symbols[id.0 as usize].2)
    }

    pub fn name_of(&self, id: SymId) -> Option<&str> {
        self.symbols.get(id.0 as usize).map(|s| s.0.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymId, &str, u32)> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, (n, w, _))| (SymId(i as u32), n.as_str(), *w))
    }
}
