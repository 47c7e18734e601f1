//! Byte-addressed memory objects with symbolic contents and indices.
//!
//! Writes at concrete addresses replace cells of the state array; writes at
//! symbolic addresses are appended to an ordered update list. A read at a
//! symbolic address becomes a select over the state literal with the updates
//! stored on top. [`read_min`] shrinks that expression to the address range
//! the path condition allows and to the updates that may alias the read.

use thiserror::Error;

use crate::solver::{PathCondition, Solver, SolverError};
use crate::term::{mask, Term, TermError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("address {addr:#x} outside [{base:#x}, {base:#x}+{size})")]
    OutOfBounds { addr: u64, base: u64, size: usize },
    #[error("index width {got}, array uses {expected}")]
    IndexWidth { expected: u32, got: u32 },
    #[error("value width {0} is not a whole number of bytes")]
    ValueWidth(u32),
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Debug, Clone)]
pub struct SymArray {
    base_address: u64,
    index_width: u32,
    state: Vec<Term>,
    updates: Vec<(Term, Term)>,
}

/// The part of an array a read can actually observe.
#[derive(Debug, Clone)]
pub struct MinimisedView {
    pub start: u64,
    pub s_min: Vec<Term>,
    pub u_min: Vec<(Term, Term)>,
    pub alpha_min: u64,
    pub alpha_max: u64,
}

impl SymArray {
    /// Zero-filled array of `size` bytes at `base_address`, addressed by
    /// `index_width`-bit terms.
    pub fn new(base_address: u64, size: usize, index_width: u32) -> SymArray {
        assert!(index_width >= 1 && index_width <= 64);
        assert!(
            base_address as u128 + size as u128 <= mask(index_width) as u128 + 1,
            "array does not fit its address width"
        );
        SymArray {
            base_address,
            index_width,
            state: vec![Term::lit(8, 0); size],
            updates: Vec::new(),
        }
    }

    pub fn base_address(&self) -> u64 {
        self.base_address
    }

    pub fn size(&self) -> usize {
        self.state.len()
    }

    pub fn index_width(&self) -> u32 {
        self.index_width
    }

    pub fn state(&self) -> &[Term] {
        &self.state
    }

    pub fn updates(&self) -> &[(Term, Term)] {
        &self.updates
    }

    pub fn contains(&self, addr: u64) -> bool {
        addr >= self.base_address && addr - self.base_address < self.state.len() as u64
    }

    fn check_index(&self, index: &Term) -> Result<(), ArrayError> {
        if index.width() != self.index_width {
            return Err(ArrayError::IndexWidth {
                expected: self.index_width,
                got: index.width(),
            });
        }
        Ok(())
    }

    pub fn index(&self, addr: u64) -> Term {
        Term::lit(self.index_width, addr)
    }

    pub fn write(&mut self, index: &Term, value: &Term) -> Result<(), ArrayError> {
        self.check_index(index)?;
        if value.width() != 8 {
            return Err(ArrayError::ValueWidth(value.width()));
        }
        match index.as_const() {
            Some(addr) => {
                if !self.contains(addr) {
                    return Err(ArrayError::OutOfBounds {
                        addr,
                        base: self.base_address,
                        size: self.size(),
                    });
                }
                self.state[(addr - self.base_address) as usize] = value.clone();
            }
            None => self.updates.push((index.clone(), value.clone())),
        }
        Ok(())
    }

    /// Value-semantics variant of [`SymArray::write`].
    pub fn with_write(&self, index: &Term, value: &Term) -> Result<SymArray, ArrayError> {
        let mut a = self.clone();
        a.write(index, value)?;
        Ok(a)
    }

    /// Select over the full state literal with every update stored on top.
    pub fn read_raw(&self, index: &Term) -> Result<Term, ArrayError> {
        self.check_index(index)?;
        if let Some(addr) = index.as_const() {
            if self.updates.is_empty() {
                return Ok(self.cell(addr));
            }
        }
        Ok(Term::array_read(index, self.base_address, &self.state, &self.updates)?)
    }

    fn cell(&self, addr: u64) -> Term {
        if self.contains(addr) {
            self.state[(addr - self.base_address) as usize].clone()
        } else {
            Term::lit(8, 0)
        }
    }

    /// None when an extremum query is undecided.
    pub fn minimise(
        &self,
        index: &Term,
        pc: &PathCondition,
        slv: &mut Solver,
    ) -> Result<Option<MinimisedView>, ArrayError> {
        self.check_index(index)?;
        let alpha_min = match slv.solve_min(index, pc) {
            Ok(v) => v,
            Err(SolverError::Unresolved) | Err(SolverError::DeadPath) => return Ok(None),
            Err(SolverError::Term(e)) => return Err(e.into()),
            Err(_) => return Ok(None),
        };
        let alpha_max = match slv.solve_max(index, pc) {
            Ok(v) => v,
            Err(SolverError::Term(e)) => return Err(e.into()),
            Err(_) => return Ok(None),
        };
        let lo = alpha_min.max(self.base_address);
        let hi = alpha_max.min(self.base_address + self.size() as u64 - 1);
        let s_min = if self.size() == 0 || lo > hi {
            Vec::new()
        } else {
            self.state[(lo - self.base_address) as usize..=(hi - self.base_address) as usize].to_vec()
        };
        let mut u_min = Vec::new();
        for (i, v) in &self.updates {
            let alias = slv.may_equal(index, i, pc).map_err(|e| match e {
                SolverError::Term(t) => ArrayError::Term(t),
                _ => ArrayError::IndexWidth {
                    expected: index.width(),
                    got: i.width(),
                },
            })?;
            if alias {
                u_min.push((i.clone(), v.clone()));
            }
        }
        Ok(Some(MinimisedView {
            start: if s_min.is_empty() { alpha_min } else { lo },
            s_min,
            u_min,
            alpha_min,
            alpha_max,
        }))
    }

    /// Read through the minimised view, falling back to [`SymArray::read_raw`]
    /// when minimisation is declined.
    pub fn read_min(&self, index: &Term, pc: &PathCondition, slv: &mut Solver) -> Result<Term, ArrayError> {
        self.check_index(index)?;
        if let Some(addr) = index.as_const() {
            if self.updates.is_empty() {
                return Ok(self.cell(addr));
            }
        }
        let Some(view) = self.minimise(index, pc, slv)? else {
            return self.read_raw(index);
        };
        if view.u_min.is_empty() {
            if let Some(addr) = index.as_const() {
                return Ok(self.cell(addr));
            }
        }
        Ok(Term::array_read(index, view.start, &view.s_min, &view.u_min)?)
    }

    /// Minimised read when enabled and the full literal exceeds `threshold`
    /// cells, raw read otherwise.
    pub fn read(
        &self,
        index: &Term,
        pc: &PathCondition,
        slv: &mut Solver,
        minimise: bool,
        threshold: usize,
    ) -> Result<Term, ArrayError> {
        if minimise && self.size() > threshold && (!index.is_const() || !self.updates.is_empty()) {
            self.read_min(index, pc, slv)
        } else {
            self.read_raw(index)
        }
    }

    /// Little-endian read of `bytes` consecutive cells starting at `index`.
    pub fn read_le(
        &self,
        index: &Term,
        bytes: u32,
        pc: &PathCondition,
        slv: &mut Solver,
        minimise: bool,
        threshold: usize,
    ) -> Result<Term, ArrayError> {
        let mut acc: Option<Term> = None;
        for k in 0..bytes {
            let at = index.add(&Term::lit(self.index_width, k as u64))?;
            let b = self.read(&at, pc, slv, minimise, threshold)?;
            acc = Some(match acc {
                None => b,
                Some(low) => b.concat(&low)?,
            });
        }
        Ok(acc.unwrap_or_else(|| Term::lit(8, 0)))
    }

    /// Little-endian write of `value` (a whole number of bytes) at `index`.
    pub fn write_le(&mut self, index: &Term, value: &Term) -> Result<(), ArrayError> {
        if value.width() % 8 != 0 {
            return Err(ArrayError::ValueWidth(value.width()));
        }
        for k in 0..value.width() / 8 {
            let at = index.add(&Term::lit(self.index_width, k as u64))?;
            let byte = value.extract(8 * k + 7, 8 * k)?;
            self.write(&at, &byte)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{SymId, SymbolTable};
    use std::collections::HashMap;
    use std::time::Duration;

    fn c8(v: u64) -> Term {
        Term::lit(8, v)
    }

    fn slv() -> Solver {
        Solver::builtin(Duration::from_secs(10))
    }

    #[test]
    fn concrete_write_hits_state() {
        let mut a = SymArray::new(0, 4, 8);
        a.write(&c8(2), &c8(7)).unwrap();
        assert_eq!(a.state()[2].as_const(), Some(7));
        assert!(a.updates().is_empty());
        assert_eq!(a.read_raw(&c8(2)).unwrap().as_const(), Some(7));
    }

    #[test]
    fn symbolic_write_goes_to_updates() {
        let mut st = SymbolTable::new();
        let alpha = st.declare("alpha", 8).unwrap();
        let mut a = SymArray::new(0, 4, 8);
        a.write(&alpha, &c8(9)).unwrap();
        assert_eq!(a.updates().len(), 1);
        let r = a.read_raw(&alpha).unwrap();
        for v in 0..4 {
            assert_eq!(r.eval(&HashMap::from([(SymId(0), v)])), 9);
        }
    }

    #[test]
    fn out_of_bounds_concrete_write() {
        let mut a = SymArray::new(0x10, 4, 8);
        assert!(matches!(
            a.write(&c8(0x14), &c8(1)),
            Err(ArrayError::OutOfBounds { addr: 0x14, .. })
        ));
        a.write(&c8(0x13), &c8(1)).unwrap();
    }

    #[test]
    fn hole_stays_in_window() {
        let mut st = SymbolTable::new();
        let alpha = st.declare("alpha", 8).unwrap();
        let mut a = SymArray::new(0, 16, 8);
        for k in 0..16 {
            a.write(&c8(k), &c8(k * 3)).unwrap();
        }
        let pc = PathCondition::from_constraints([
            c8(3).ule(&alpha).unwrap(),
            alpha.ule(&c8(6)).unwrap(),
            alpha.ne(&c8(5)).unwrap(),
        ])
        .unwrap();
        let mut s = slv();
        let v = a.minimise(&alpha, &pc, &mut s).unwrap().unwrap();
        assert_eq!((v.alpha_min, v.alpha_max, v.start), (3, 6, 3));
        assert_eq!(v.s_min.len(), 4);
        assert_eq!(v.s_min[2].as_const(), Some(15));
        assert!(s.stats().query_count <= 2 * 9);
    }

    #[test]
    fn non_aliasing_update_is_dropped() {
        let mut st = SymbolTable::new();
        let alpha = st.declare("alpha", 8).unwrap();
        let beta = st.declare("beta", 8).unwrap();
        let mut a = SymArray::new(0, 16, 8);
        a.write(&beta, &c8(0x55)).unwrap();
        let pc = PathCondition::from_constraints([
            beta.eq(&c8(0)).unwrap(),
            alpha.uge(&c8(1)).unwrap(),
            alpha.ult(&c8(16)).unwrap(),
        ])
        .unwrap();
        let v = a.minimise(&alpha, &pc, &mut slv()).unwrap().unwrap();
        assert!(v.u_min.is_empty());
        assert_eq!(v.s_min.len(), 15);
    }

    #[test]
    fn constant_index_collapses() {
        let mut st = SymbolTable::new();
        let x = st.declare("x", 8).unwrap();
        let mut a = SymArray::new(0, 16, 8);
        a.write(&c8(2), &x).unwrap();
        let pc = PathCondition::new();
        let r = a.read_min(&c8(2), &pc, &mut slv()).unwrap();
        assert!(r.ptr_eq(&a.read_raw(&c8(2)).unwrap()));
    }

    #[test]
    fn little_endian_round_trip() {
        let mut a = SymArray::new(0, 8, 8);
        a.write_le(&c8(2), &Term::lit(32, 0xdeadbeef)).unwrap();
        assert_eq!(a.state()[2].as_const(), Some(0xef));
        assert_eq!(a.state()[5].as_const(), Some(0xde));
        let r = a.read_le(&c8(2), 4, &PathCondition::new(), &mut slv(), true, 0).unwrap();
        assert_eq!(r.as_const(), Some(0xdeadbeef));
    }
}
