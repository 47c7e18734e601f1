//! Site-indexed operator table. DUV bodies build every mutable operator
//! through [`MutationTable::op`], so a mutant is one table entry rather than
//! a rewritten model.

use thiserror::Error;

use crate::engine::{Exec, Stop};
use crate::term::{OperatorTag, Term};

use super::{Level, Peripheral};
use OperatorTag::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteDecl {
    pub id: &'static str,
    pub original: OperatorTag,
}

const fn site(id: &'static str, original: OperatorTag) -> SiteDecl {
    SiteDecl { id, original }
}

const GCD: &[SiteDecl] = &[
    site("start.and", And),
    site("start.ne", Ne),
    site("loop.ne", Ne),
    site("cmp.ult", Ult),
    site("sub.a", Sub),
    site("sub.b", Sub),
];

const HASH_TLM: &[SiteDecl] = &[
    site("start.and", And),
    site("start.ne", Ne),
    site("round.xor", Xor),
    site("round.add", Add),
    site("round.badd", Add),
    site("count.inc", Add),
    site("count.cmp", Ult),
];

const HASH_RTL: &[SiteDecl] = &[
    site("start.and", And),
    site("start.ne", Ne),
    site("round.xor", Xor),
    site("rot.shl", Shl),
    site("rot.lshr", Lshr),
    site("rot.or", Or),
    site("round.add", Add),
    site("round.badd", Add),
    site("count.inc", Add),
    site("count.cmp", Ult),
];

const MAP_TLM: &[SiteDecl] = &[
    site("start.and", And),
    site("start.ne", Ne),
    site("lane.add", Add),
    site("lane.xor", Xor),
    site("lane.addr", Add),
    site("index.inc", Add),
    site("index.cmp", Ult),
];

const MAP_RTL: &[SiteDecl] = &[
    site("start.and", And),
    site("start.ne", Ne),
    site("lane.add", Add),
    site("lane.xor", Xor),
    site("rot.shl", Shl),
    site("rot.lshr", Lshr),
    site("rot.or", Or),
    site("index.inc", Add),
    site("index.cmp", Ult),
];

const PLIC: &[SiteDecl] = &[
    site("elig.and", And),
    site("bit.lshr", Lshr),
    site("bit.and", And),
    site("thr.ult", Ult),
    site("best.ult", Ult),
    site("clamp.ult", Ult),
    site("clear.shl", Shl),
    site("clear.and", And),
];

pub fn sites(p: Peripheral, level: Level) -> &'static [SiteDecl] {
    match (p, level) {
        (Peripheral::Gcd, _) => GCD,
        (Peripheral::Hash, Level::Tlm) => HASH_TLM,
        (Peripheral::Hash, Level::Rtl) => HASH_RTL,
        (Peripheral::Map, Level::Tlm) => MAP_TLM,
        (Peripheral::Map, Level::Rtl) => MAP_RTL,
        (Peripheral::Plic, _) => PLIC,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mutation {
    pub peripheral: Peripheral,
    pub level: Level,
    pub site: String,
    pub replacement: OperatorTag,
}

impl Mutation {
    pub fn new(p: Peripheral, level: Level, site: &str, replacement: OperatorTag) -> Result<Mutation, MutationError> {
        MutationTable::new(p, level).set_mutation(site, replacement)?;
        Ok(Mutation {
            peripheral: p,
            level,
            site: site.to_string(),
            replacement,
        })
    }

    pub fn label(&self) -> String {
        format!("{}:{}->{}", self.site, self.original().name(), self.replacement.name())
    }

    pub fn original(&self) -> OperatorTag {
        sites(self.peripheral, self.level)
            .iter()
            .find(|s| s.id == self.site)
            .map(|s| s.original)
            .expect("validated site")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("no mutation site {site} in {peripheral} {level}")]
    UnknownSite {
        peripheral: Peripheral,
        level: Level,
        site: String,
    },
    #[error("cannot replace {original} by {replacement}: different operator class")]
    CrossClass {
        original: OperatorTag,
        replacement: OperatorTag,
    },
    #[error("cannot replace {original} by {replacement}: different arity")]
    Arity {
        original: OperatorTag,
        replacement: OperatorTag,
    },
}

/// Every single-site, same-class mutant of one DUV.
pub fn mutants(p: Peripheral, level: Level) -> Vec<Mutation> {
    let mut out = Vec::new();
    for s in sites(p, level) {
        for &r in OperatorTag::class_members(s.original.class()) {
            if r != s.original && r.arity() == s.original.arity() {
                out.push(Mutation {
                    peripheral: p,
                    level,
                    site: s.id.to_string(),
                    replacement: r,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MutationTable {
    peripheral: Peripheral,
    level: Level,
    active: Option<(&'static str, OperatorTag)>,
}

impl MutationTable {
    pub fn new(peripheral: Peripheral, level: Level) -> MutationTable {
        MutationTable {
            peripheral,
            level,
            active: None,
        }
    }

    fn decl(&self, site: &str) -> Option<&'static SiteDecl> {
        sites(self.peripheral, self.level).iter().find(|s| s.id == site)
    }

    pub fn set_mutation(&mut self, site: &str, replacement: OperatorTag) -> Result<(), MutationError> {
        let d = self.decl(site).ok_or_else(|| MutationError::UnknownSite {
            peripheral: self.peripheral,
            level: self.level,
            site: site.to_string(),
        })?;
        if d.original.class() != replacement.class() {
            return Err(MutationError::CrossClass {
                original: d.original,
                replacement,
            });
        }
        if d.original.arity() != replacement.arity() {
            return Err(MutationError::Arity {
                original: d.original,
                replacement,
            });
        }
        self.active = Some((d.id, replacement));
        Ok(())
    }

    pub fn clear(&mut self) {
        self.active = None;
    }

    pub fn active(&self) -> Option<(&'static str, OperatorTag)> {
        self.active
    }

    /// Operator in effect at `site` when the model would use `default`.
    pub fn tag(&self, site: &str, default: OperatorTag) -> OperatorTag {
        match self.active {
            Some((s, r)) if s == site => r,
            _ => default,
        }
    }

    /// Builds the operator declared at `site`.
    pub fn op(&self, e: &mut Exec, site: &str, args: &[Term]) -> Result<Term, Stop> {
        let d = self
            .decl(site)
            .ok_or_else(|| Stop::Fault(format!("undeclared mutation site {}", site)))?;
        self.op_as(e, site, d.original, args)
    }

    /// Like [`op`](Self::op) but with a model-chosen default operator of the
    /// site's class, which is how seeded bug variants swap an operator.
    pub fn op_as(&self, e: &mut Exec, site: &str, default: OperatorTag, args: &[Term]) -> Result<Term, Stop> {
        let tag = self.tag(site, default);
        match tag {
            Udiv => e.checked_udiv(&args[0], &args[1], site),
            Urem => e.checked_urem(&args[0], &args[1], site),
            Shl | Lshr | Ashr => e.checked_shift(tag, &args[0], &args[1], site),
            _ => Ok(Term::apply(tag, args)?),
        }
    }
}
