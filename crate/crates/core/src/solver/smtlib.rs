//! SMT-LIB2 (QF_ABV) rendering of queries and parsing of solver replies.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::term::{OperatorTag, SymId, Term, TermKind};

use super::{Model, PathCondition, Verdict};

/// Nodes nested deeper than this are bound with `define-fun` so the script
/// never needs deep recursion to parse.
const MAX_INLINE_HEIGHT: u32 = 48;

fn is_simple_symbol(name: &str) -> bool {
    let mut chars = name.chars();
    let first_ok = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || "~!@$%^&*_-+=<>.?/".contains(c));
    first_ok
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
        && !RESERVED.contains(&name)
}

const RESERVED: &[&str] = &[
    "as", "let", "forall", "exists", "match", "par", "assert", "true", "false", "ite", "not", "and", "or",
    "xor", "distinct", "select", "store",
];

pub fn quote_symbol(name: &str) -> String {
    if is_simple_symbol(name) {
        name.to_string()
    } else {
        format!("|{}|", name.replace(['|', '\\'], "_"))
    }
}

pub fn bv_literal(width: u32, value: u64) -> String {
    if width % 4 == 0 {
        format!("#x{:0w$x}", value, w = (width / 4) as usize)
    } else {
        format!("#b{:0w$b}", value, w = width as usize)
    }
}

fn is_relational(t: &Term) -> bool {
    matches!(
        t.as_op(),
        Some((
            OperatorTag::Eq
                | OperatorTag::Ne
                | OperatorTag::Ult
                | OperatorTag::Ule
                | OperatorTag::Slt
                | OperatorTag::Sle,
            _
        ))
    )
}

struct Printer {
    names: HashMap<usize, String>,
    defined: HashMap<usize, String>,
}

impl Printer {
    fn bv(&self, t: &Term, out: &mut String) {
        if let Some(n) = self.defined.get(&t.ptr_key()) {
            out.push_str(n);
            return;
        }
        match t.kind() {
            TermKind::Const(v) => out.push_str(&bv_literal(t.width(), *v)),
            TermKind::Symbol { .. } => out.push_str(&self.names[&t.ptr_key()]),
            TermKind::Op { tag, args } => {
                if is_relational(t) {
                    out.push_str("(ite ");
                    self.boolean(t, out);
                    out.push_str(" #b1 #b0)");
                    return;
                }
                let head = match tag {
                    OperatorTag::Add => "bvadd".to_string(),
                    OperatorTag::Sub => "bvsub".into(),
                    OperatorTag::Mul => "bvmul".into(),
                    OperatorTag::Udiv => "bvudiv".into(),
                    OperatorTag::Urem => "bvurem".into(),
                    OperatorTag::And => "bvand".into(),
                    OperatorTag::Or => "bvor".into(),
                    OperatorTag::Xor => "bvxor".into(),
                    OperatorTag::Not => "bvnot".into(),
                    OperatorTag::Shl => "bvshl".into(),
                    OperatorTag::Lshr => "bvlshr".into(),
                    OperatorTag::Ashr => "bvashr".into(),
                    OperatorTag::Concat => "concat".into(),
                    OperatorTag::Zext(w) => format!("(_ zero_extend {})", w - args[0].width()),
                    OperatorTag::Sext(w) => format!("(_ sign_extend {})", w - args[0].width()),
                    OperatorTag::Extract { hi, lo } => format!("(_ extract {} {})", hi, lo),
                    OperatorTag::Ite => {
                        out.push_str("(ite ");
                        self.boolean(&args[0], out);
                        out.push(' ');
                        self.bv(&args[1], out);
                        out.push(' ');
                        self.bv(&args[2], out);
                        out.push(')');
                        return;
                    }
                    _ => unreachable!("relational handled above"),
                };
                out.push('(');
                out.push_str(&head);
                for a in args {
                    out.push(' ');
                    self.bv(a, out);
                }
                out.push(')');
            }
            TermKind::Read { .. } => {
                let r = t.as_read().unwrap();
                let iw = r.index.width();
                let rebase = |x: &Term, out: &mut String| {
                    if r.offset == 0 {
                        self.bv(x, out);
                    } else {
                        out.push_str("(bvsub ");
                        self.bv(x, out);
                        out.push(' ');
                        out.push_str(&bv_literal(iw, r.offset));
                        out.push(')');
                    }
                };
                let mut arr = format!("((as const (Array (_ BitVec {}) (_ BitVec 8))) #x00)", iw);
                for (k, cell) in r.cells.iter().enumerate() {
                    let mut s = format!("(store {} {} ", arr, bv_literal(iw, k as u64));
                    self.bv(cell, &mut s);
                    s.push(')');
                    arr = s;
                }
                for (i, v) in r.stores() {
                    let mut s = format!("(store {} ", arr);
                    rebase(i, &mut s);
                    s.push(' ');
                    self.bv(v, &mut s);
                    s.push(')');
                    arr = s;
                }
                out.push_str("(select ");
                out.push_str(&arr);
                out.push(' ');
                rebase(r.index, out);
                out.push(')');
            }
        }
    }

    fn boolean(&self, t: &Term, out: &mut String) {
        let inline = !self.defined.contains_key(&t.ptr_key());
        match (t.kind(), t.as_op()) {
            (TermKind::Const(v), _) => out.push_str(if *v == 1 { "true" } else { "false" }),
            (_, Some((tag, args))) if inline && is_relational(t) => {
                let head = match tag {
                    OperatorTag::Eq => "=",
                    OperatorTag::Ne => "distinct",
                    OperatorTag::Ult => "bvult",
                    OperatorTag::Ule => "bvule",
                    OperatorTag::Slt => "bvslt",
                    OperatorTag::Sle => "bvsle",
                    _ => unreachable!(),
                };
                out.push('(');
                out.push_str(head);
                for a in args {
                    out.push(' ');
                    self.bv(a, out);
                }
                out.push(')');
            }
            _ => {
                out.push_str("(= ");
                self.bv(t, out);
                out.push_str(" #b1)");
            }
        }
    }
}

/// Renders `pc ∧ extra` as a script; with `want_model` one `get-value` per
/// symbol follows `check-sat`.
pub fn serialize_query(pc: &PathCondition, extra: &[Term], want_model: bool) -> String {
    let mut roots: Vec<Term> = pc.constraints().to_vec();
    roots.extend(extra.iter().cloned());
    serialize_constraints(&roots, want_model).0
}

/// Returns the script and the symbol names it declares.
pub fn serialize_constraints(roots: &[Term], want_model: bool) -> (String, Vec<(SymId, String)>) {
    let order = Term::topo_order(roots);
    let mut refs: HashMap<usize, u32> = HashMap::new();
    for t in &order {
        for c in t.children() {
            *refs.entry(c.ptr_key()).or_default() += 1;
        }
    }
    let mut names = HashMap::new();
    let mut decls = Vec::new();
    let mut used_names = HashSet::new();
    for (id, name, width) in Term::symbols_of(roots) {
        let mut q = quote_symbol(&name);
        if !used_names.insert(q.clone()) {
            q = quote_symbol(&format!("{}!{}", name, id.0));
            used_names.insert(q.clone());
        }
        decls.push((id, q, width));
    }
    let by_id: HashMap<SymId, String> = decls.iter().map(|d| (d.0, d.1.clone())).collect();
    for t in &order {
        if let Some((id, _)) = t.as_symbol() {
            names.insert(t.ptr_key(), by_id[&id].clone());
        }
    }

    let mut script = String::from("(set-logic QF_ABV)\n");
    for (_, q, w) in &decls {
        let _ = writeln!(script, "(declare-fun {} () (_ BitVec {}))", q, w);
    }

    let mut printer = Printer {
        names,
        defined: HashMap::new(),
    };
    let mut height: HashMap<usize, u32> = HashMap::new();
    let mut next = 0usize;
    for t in &order {
        let compound = matches!(t.kind(), TermKind::Op { .. } | TermKind::Read { .. });
        if !compound {
            height.insert(t.ptr_key(), 0);
            continue;
        }
        let h = 1 + t.children().iter().map(|c| height[&c.ptr_key()]).max().unwrap_or(0);
        let shared = refs.get(&t.ptr_key()).copied().unwrap_or(0) > 1;
        if shared || h > MAX_INLINE_HEIGHT {
            let name = format!("_t{}", next);
            next += 1;
            let mut body = String::new();
            printer.bv(t, &mut body);
            let _ = writeln!(script, "(define-fun {} () (_ BitVec {}) {})", name, t.width(), body);
            printer.defined.insert(t.ptr_key(), name);
            height.insert(t.ptr_key(), 0);
        } else {
            height.insert(t.ptr_key(), h);
        }
    }

    for r in roots {
        let mut s = String::new();
        printer.boolean(r, &mut s);
        let _ = writeln!(script, "(assert {})", s);
    }
    script.push_str("(check-sat)\n");
    if want_model {
        for (_, q, _) in &decls {
            let _ = writeln!(script, "(get-value ({}))", q);
        }
    }
    (script, decls.into_iter().map(|d| (d.0, d.1)).collect())
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Option<Vec<Sexp>> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                let done = stack.pop()?;
                stack.last_mut()?.push(Sexp::List(done));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                chars.next();
                let mut s = String::from("|");
                for d in chars.by_ref() {
                    s.push(d);
                    if d == '|' {
                        break;
                    }
                }
                stack.last_mut()?.push(Sexp::Atom(s));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                for d in chars.by_ref() {
                    if d == '"' {
                        break;
                    }
                    s.push(d);
                }
                stack.last_mut()?.push(Sexp::Atom(s));
            }
            _ => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                stack.last_mut()?.push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return None;
    }
    stack.pop()
}

fn parse_value(s: &Sexp) -> Option<u64> {
    match s {
        Sexp::Atom(a) => {
            if let Some(h) = a.strip_prefix("#x") {
                u64::from_str_radix(h, 16).ok()
            } else if let Some(b) = a.strip_prefix("#b") {
                u64::from_str_radix(b, 2).ok()
            } else {
                None
            }
        }
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(u), Sexp::Atom(v), Sexp::Atom(_)] if u == "_" => v.strip_prefix("bv")?.parse().ok(),
            _ => None,
        },
    }
}

/// Parses a reply to a script from [`serialize_constraints`]. Returns None
/// when the reply is malformed or reports an error.
pub fn parse_reply(reply: &str, decls: &[(SymId, String)], want_model: bool) -> Option<(Verdict, Option<Model>)> {
    let items = parse_sexps(reply)?;
    let mut it = items.iter();
    let verdict = match it.next()? {
        Sexp::Atom(a) if a == "sat" => Verdict::Sat,
        Sexp::Atom(a) if a == "unsat" => return Some((Verdict::Unsat, None)),
        Sexp::Atom(a) if a == "unknown" => return Some((Verdict::Unknown, None)),
        _ => return None,
    };
    if !want_model {
        return Some((verdict, None));
    }
    let by_name: HashMap<&str, SymId> = decls.iter().map(|(id, n)| (n.as_str(), *id)).collect();
    let mut model = Model::new();
    for item in it {
        let Sexp::List(pairs) = item else { return None };
        for p in pairs {
            let Sexp::List(kv) = p else { return None };
            let [Sexp::Atom(name), value] = kv.as_slice() else {
                return None;
            };
            let id = *by_name.get(name.as_str())?;
            model.insert(id, parse_value(value)?);
        }
    }
    if model.len() != decls.len() {
        return None;
    }
    Some((verdict, Some(model)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::SymbolTable;

    #[test]
    fn equality_script_shape() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 8).unwrap();
        let pc = PathCondition::from_constraints([a.eq(&Term::lit(8, 3)).unwrap()]).unwrap();
        let s = serialize_query(&pc, &[], false);
        assert_eq!(
            s,
            "(set-logic QF_ABV)\n(declare-fun a () (_ BitVec 8))\n(assert (= a #x03))\n(check-sat)\n"
        );
    }

    #[test]
    fn odd_widths_use_binary_literals() {
        assert_eq!(bv_literal(3, 5), "#b101");
        assert_eq!(bv_literal(12, 0xabc), "#xabc");
        assert_eq!(bv_literal(1, 1), "#b1");
    }

    #[test]
    fn names_are_quoted_when_needed() {
        assert_eq!(quote_symbol("in_a"), "in_a");
        assert_eq!(quote_symbol("data[0]"), "|data[0]|");
        assert_eq!(quote_symbol("0x"), "|0x|");
        assert_eq!(quote_symbol("select"), "|select|");
    }

    #[test]
    fn read_is_rebased() {
        let mut st = SymbolTable::new();
        let i = st.declare("i", 8).unwrap();
        let r = Term::array_read(&i, 0x10, &[Term::lit(8, 7), Term::lit(8, 9)], &[]).unwrap();
        let s = serialize_query(&PathCondition::new(), &[r.eq(&Term::lit(8, 9)).unwrap()], true);
        assert!(s.contains("(store (store ((as const (Array (_ BitVec 8) (_ BitVec 8))) #x00) #x00 #x07) #x01 #x09)"));
        assert!(s.contains("(bvsub i #x10)"));
        assert!(s.ends_with("(check-sat)\n(get-value (i))\n"));
    }

    #[test]
    fn replies_parse() {
        let decls = vec![(SymId(0), "a".to_string()), (SymId(1), "|b c|".to_string())];
        let (v, m) = parse_reply("sat\n((a #x03))\n((|b c| #b1))\n", &decls, true).unwrap();
        assert_eq!(v, Verdict::Sat);
        let m = m.unwrap();
        assert_eq!((m[&SymId(0)], m[&SymId(1)]), (3, 1));
        assert_eq!(parse_reply("unsat\n", &decls, true), Some((Verdict::Unsat, None)));
        assert_eq!(parse_reply("(error \"x\")", &decls, false), None);
        let (_, m) = parse_reply("sat ((a (_ bv7 8))) ((|b c| #b0))", &decls, true).unwrap();
        assert_eq!(m.unwrap()[&SymId(0)], 7);
    }

    #[test]
    fn deep_terms_are_bound() {
        let mut st = SymbolTable::new();
        let a = st.declare("a", 8).unwrap();
        let mut t = a.clone();
        for k in 0..500 {
            t = t.add(&Term::lit(8, k % 3 + 1)).unwrap().xor(&a).unwrap();
        }
        let s = serialize_query(&PathCondition::new(), &[t.eq(&Term::lit(8, 1)).unwrap()], false);
        assert!(s.contains("define-fun"));
        let max_depth = s.lines().map(|l| l.chars().filter(|c| *c == '(').count()).max().unwrap();
        assert!(max_depth < 4 * MAX_INLINE_HEIGHT as usize);
    }
}
