//! Platform-level interrupt controller with eight sources and one target.
//! Sources are numbered 1..=8; bit i of PENDING and ENABLE belongs to
//! source i.

use std::cell::RefCell;
use std::rc::Rc;

use crate::engine::{Exec, Stop};
use crate::kernel::{Kernel, SignalId, Trigger};
use crate::term::{OperatorTag, Term};

use super::bus::{rtl_decode, rtl_default_access, tlm_access, BusOp, Cmd, DecodeOptions, RegBank, RtlBus, TlmRegs, TlmTransaction};
use super::mutation::MutationTable;
use super::{Level, Model, Peripheral, Variant};

pub const SOURCES: u32 = 8;
pub const MAX_PRIORITY: u64 = 7;

/// Concrete model state for oracles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlicState {
    pub priority: [u64; 9],
    pub pending: u64,
    pub enable: u64,
    pub threshold: u64,
}

impl PlicState {
    pub fn eligible(&self, i: u32) -> bool {
        (self.pending >> i) & 1 == 1 && (self.enable >> i) & 1 == 1 && self.priority[i as usize] > self.threshold
    }

    pub fn irq(&self) -> bool {
        (1..=SOURCES).any(|i| self.eligible(i))
    }

    /// Highest eligible priority, lowest id on ties; 0 if none. Clears the
    /// claimed pending bit.
    pub fn claim(&mut self) -> u64 {
        let mut best = 0u32;
        for i in 1..=SOURCES {
            if self.eligible(i) && (best == 0 || self.priority[i as usize] > self.priority[best as usize]) {
                best = i;
            }
        }
        if best != 0 {
            self.pending &= !(1 << best);
        }
        best as u64
    }
}

pub fn clamp_priority(v: u64) -> u64 {
    v.min(MAX_PRIORITY)
}

fn lit(v: u64) -> Term {
    Term::lit(32, v)
}

fn bit(e: &mut Exec, ops: &MutationTable, word: &Term, i: u32) -> Result<Term, Stop> {
    let sh = ops.op(e, "bit.lshr", &[word.clone(), lit(i as u64)])?;
    ops.op(e, "bit.and", &[sh, lit(1)])
}

/// Width-1 eligibility of source `i`.
fn eligible(
    e: &mut Exec,
    ops: &MutationTable,
    regs: &Regs,
    i: u32,
    inverted: bool,
) -> Result<Term, Stop> {
    let p = bit(e, ops, &regs.pending, i)?;
    let en = bit(e, ops, &regs.enable, i)?;
    let both = ops.op(e, "elig.and", &[p, en])?;
    let prio = &regs.priority[i as usize];
    let over = if inverted {
        ops.op_as(e, "thr.ult", OperatorTag::Ule, &[prio.clone(), regs.threshold.clone()])?
    } else {
        ops.op(e, "thr.ult", &[regs.threshold.clone(), prio.clone()])?
    };
    Ok(both.ne(&lit(0))?.and(&over)?)
}

fn clear_bit(e: &mut Exec, ops: &MutationTable, pending: &Term, id: &Term) -> Result<Term, Stop> {
    let mask = ops.op(e, "clear.shl", &[lit(1), id.clone()])?;
    ops.op(e, "clear.and", &[pending.clone(), mask.not()?])
}

/// Register values as terms.
struct Regs {
    priority: Vec<Term>,
    pending: Term,
    enable: Term,
    threshold: Term,
}

fn priority_name(i: u32) -> String {
    format!("PRIORITY{}", i)
}

/// Offset of the PRIORITY register of source `i`.
pub fn priority_offset(i: u32) -> u64 {
    4 * (i as u64 - 1)
}

/// Clears in-flight bit `id` when `id` names a source.
fn complete(e: &mut Exec, in_flight: &Term, id: &Term) -> Result<Term, Stop> {
    if !e.branch(&id.ult(&lit(SOURCES as u64 + 1))?)? {
        return Ok(in_flight.clone());
    }
    Ok(in_flight.and(&lit(1).shl(id)?.not()?)?)
}

pub struct PlicTlm {
    regs: TlmRegs,
    in_flight: Rc<RefCell<Term>>,
    ops: MutationTable,
    opts: DecodeOptions,
    raw_priority: bool,
}

impl PlicTlm {
    pub fn build(_k: &mut Kernel, variant: &Variant) -> Result<PlicTlm, Stop> {
        Ok(PlicTlm {
            regs: TlmRegs::new(Peripheral::Plic.layout()),
            in_flight: Rc::new(RefCell::new(lit(0))),
            ops: variant.table(Peripheral::Plic, Level::Tlm),
            opts: DecodeOptions {
                assert_style: variant.has("assert-style"),
                loose_bounds: false,
            },
            raw_priority: variant.has("raw-priority"),
        })
    }

    fn snapshot(&self, e: &mut Exec) -> Result<Regs, Stop> {
        let mut priority = vec![lit(0)];
        for i in 1..=SOURCES {
            priority.push(self.regs.load(e, &priority_name(i))?);
        }
        Ok(Regs {
            priority,
            pending: self.regs.load(e, "PENDING")?,
            enable: self.regs.load(e, "ENABLE")?,
            threshold: self.regs.load(e, "THRESHOLD")?,
        })
    }

    fn claim(&self, e: &mut Exec) -> Result<Term, Stop> {
        let regs = self.snapshot(e)?;
        let mut best = 0u32;
        for i in 1..=SOURCES {
            let el = eligible(e, &self.ops, &regs, i, false)?;
            if !e.branch(&el)? {
                continue;
            }
            let better = best == 0 || {
                let c = self.ops.op(e, "best.ult", &[regs.priority[best as usize].clone(), regs.priority[i as usize].clone()])?;
                e.branch(&c)?
            };
            if better {
                best = i;
            }
        }
        let id = lit(best as u64);
        if best != 0 {
            let p = clear_bit(e, &self.ops, &regs.pending, &id)?;
            self.regs.store("PENDING", &p)?;
        }
        Ok(id)
    }

    fn clamp(&self, e: &mut Exec, v: &Term) -> Result<Term, Stop> {
        if self.raw_priority {
            return Ok(v.clone());
        }
        let over = self.ops.op(e, "clamp.ult", &[lit(MAX_PRIORITY), v.clone()])?;
        Ok(if e.branch(&over)? { lit(MAX_PRIORITY) } else { v.clone() })
    }
}

impl Model for PlicTlm {
    fn peripheral(&self) -> Peripheral {
        Peripheral::Plic
    }

    fn level(&self) -> Level {
        Level::Tlm
    }

    fn inject(&self, _k: &mut Kernel, name: &str, value: &Term) -> Result<(), Stop> {
        self.regs.inject(name, value)
    }

    fn inject_byte(&self, _k: &mut Kernel, addr: u64, value: &Term) -> Result<(), Stop> {
        self.regs.inject_byte(addr, value)
    }

    fn peek_word(&self, _k: &Kernel, e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        self.regs.peek_word(e, addr)
    }

    fn peek_byte(&self, _k: &Kernel, e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        self.regs.peek_byte(e, addr)
    }

    fn kick(&self, _k: &mut Kernel, _e: &mut Exec) -> Result<(), Stop> {
        Ok(())
    }

    fn finished(&self, _k: &Kernel, _e: &mut Exec) -> Result<Term, Stop> {
        Ok(Term::bool(true))
    }

    /// Interrupt request from source `i` through its gateway.
    fn raise(&self, _k: &mut Kernel, e: &mut Exec, i: u32) -> Result<(), Stop> {
        let flight = self.in_flight.borrow().clone();
        let busy = flight.lshr(&lit(i as u64))?.and(&lit(1))?.eq(&lit(1))?;
        if e.branch(&busy)? {
            return Ok(());
        }
        let pending = self.regs.load(e, "PENDING")?;
        self.regs.store("PENDING", &pending.or(&lit(1 << i))?)?;
        *self.in_flight.borrow_mut() = flight.or(&lit(1 << i))?;
        Ok(())
    }

    fn irq(&self, _k: &Kernel, e: &mut Exec) -> Result<Term, Stop> {
        let regs = self.snapshot(e)?;
        let mut any = Term::bool(false);
        for i in 1..=SOURCES {
            any = any.or(&eligible(e, &self.ops, &regs, i, false)?)?;
        }
        Ok(any)
    }

    fn transport(&self, _k: &mut Kernel, e: &mut Exec, txn: &mut TlmTransaction) -> Result<(), Stop> {
        let w = {
            let mut rf = self.regs.0.borrow_mut();
            match tlm_access(e, &mut rf, txn, self.opts)? {
                Some(w) => rf.layout().registers[w].clone(),
                None => return Ok(()),
            }
        };
        match (txn.cmd, w.name.as_str()) {
            (Cmd::Read, "CLAIM") => {
                let id = self.claim(e)?;
                let shift = txn.addr.sub(&Term::lit(txn.addr.width(), w.offset))?.zext(32)?.mul(&lit(8))?;
                let v = id.lshr(&shift)?;
                txn.data = (0..txn.data.len() as u32)
                    .map(|k| v.extract(8 * k + 7, 8 * k))
                    .collect::<Result<_, _>>()?;
            }
            (Cmd::Write, "CLAIM") => {
                let id = self.regs.load(e, "CLAIM")?;
                let f = self.in_flight.borrow().clone();
                *self.in_flight.borrow_mut() = complete(e, &f, &id)?;
            }
            (Cmd::Write, name) if name.starts_with("PRIORITY") => {
                let v = self.regs.load(e, name)?;
                let c = self.clamp(e, &v)?;
                self.regs.store(name, &c)?;
            }
            _ => {}
        }
        Ok(())
    }
}

pub struct PlicRtl {
    pub bus: RtlBus,
    bank: RegBank,
    pub src: SignalId,
    pub irq: SignalId,
}

impl PlicRtl {
    pub fn build(k: &mut Kernel, variant: &Variant) -> Result<PlicRtl, Stop> {
        let bus = RtlBus::new(k, "plic.rtl")?;
        let bank = RegBank::new(k, Peripheral::Plic.layout(), "plic.rtl");
        let src = k.signal("plic.rtl.src", lit(0));
        let irq = k.signal("plic.rtl.irq", Term::lit(1, 0));
        let ops = variant.table(Peripheral::Plic, Level::Rtl);
        let inverted = variant.has("threshold-inversion");
        let (b2, bk) = (bus, bank.clone());
        let in_flight = Rc::new(RefCell::new(lit(0)));
        k.method("plic.rtl", &[Trigger::Posedge(bus.clk)], true, move |ctx| {
            let regs = Regs {
                priority: std::iter::once(lit(0))
                    .chain((1..=SOURCES).map(|i| ctx.read(bk.sig(&priority_name(i)))))
                    .collect(),
                pending: ctx.read(bk.sig("PENDING")),
                enable: ctx.read(bk.sig("ENABLE")),
                threshold: ctx.read(bk.sig("THRESHOLD")),
            };
            let mut elig = vec![Term::bool(false)];
            for i in 1..=SOURCES {
                elig.push(eligible(ctx.exec(), &ops, &regs, i, inverted)?);
            }
            let mut pending = regs.pending.clone();
            let mut flight = in_flight.borrow().clone();
            let op = rtl_decode(ctx, &b2, &bk)?;
            let word = |op: &BusOp| match op {
                BusOp::Write { word: Some(a), .. } | BusOp::Read { word: Some(a) } => Some(bk.window_of(*a).name.as_str()),
                _ => None,
            };
            match (&op, word(&op)) {
                (BusOp::Read { .. }, Some("CLAIM")) => {
                    let e = ctx.exec();
                    let mut best = lit(0);
                    let mut best_prio = lit(0);
                    for i in 1..=SOURCES {
                        let p = &regs.priority[i as usize];
                        let higher = ops.op(e, "best.ult", &[best_prio.clone(), p.clone()])?;
                        let take = elig[i as usize].and(&higher)?;
                        best = take.ite(&lit(i as u64), &best)?;
                        best_prio = take.ite(p, &best_prio)?;
                    }
                    pending = clear_bit(e, &ops, &pending, &best)?;
                    ctx.write(b2.rdata, &best)?;
                    ctx.write(b2.ready, &Term::lit(1, 1))?;
                }
                (BusOp::Write { data, .. }, Some("CLAIM")) => {
                    flight = complete(ctx.exec(), &flight, data)?;
                    ctx.write(bk.sig("CLAIM"), data)?;
                    ctx.write(b2.ready, &Term::lit(1, 1))?;
                }
                (BusOp::Write { data, .. }, Some(name)) if name.starts_with("PRIORITY") => {
                    let over = ops.op(ctx.exec(), "clamp.ult", &[lit(MAX_PRIORITY), data.clone()])?;
                    let v = over.ite(&lit(MAX_PRIORITY), data)?;
                    ctx.write(bk.sig(name), &v)?;
                    ctx.write(b2.ready, &Term::lit(1, 1))?;
                }
                _ => rtl_default_access(ctx, &b2, &bk, &op)?,
            }
            // Gateway: a request is forwarded once until completed.
            let req = ctx.read(src);
            let fresh = req.and(&flight.not()?)?;
            pending = pending.or(&fresh)?;
            flight = flight.or(&fresh)?;
            *in_flight.borrow_mut() = flight;
            ctx.write(bk.sig("PENDING"), &pending)?;
            let mut any = Term::bool(false);
            for el in &elig[1..] {
                any = any.or(el)?;
            }
            ctx.write(irq, &any)
        })?;
        Ok(PlicRtl { bus, bank, src, irq })
    }
}

impl Model for PlicRtl {
    fn rtl_bus(&self) -> Option<RtlBus> {
        Some(self.bus)
    }

    fn reg_signal(&self, name: &str) -> Option<SignalId> {
        Some(self.bank.sig(name))
    }

    fn peripheral(&self) -> Peripheral {
        Peripheral::Plic
    }

    fn level(&self) -> Level {
        Level::Rtl
    }

    fn inject(&self, k: &mut Kernel, name: &str, value: &Term) -> Result<(), Stop> {
        self.bank.inject(k, name, value)
    }

    fn inject_byte(&self, k: &mut Kernel, addr: u64, value: &Term) -> Result<(), Stop> {
        self.bank.inject_byte(k, addr, value)
    }

    fn peek_word(&self, k: &Kernel, _e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        Ok(self.bank.peek_word(k, addr))
    }

    fn kick(&self, _k: &mut Kernel, _e: &mut Exec) -> Result<(), Stop> {
        Ok(())
    }

    fn finished(&self, _k: &Kernel, _e: &mut Exec) -> Result<Term, Stop> {
        Ok(Term::bool(true))
    }

    /// Drives source request lines for one cycle.
    fn raise(&self, k: &mut Kernel, e: &mut Exec, i: u32) -> Result<(), Stop> {
        k.write(e, self.src, &lit(1 << i))?;
        self.bus.cycle(k, e)?;
        k.write(e, self.src, &lit(0))
    }

    fn irq(&self, k: &Kernel, _e: &mut Exec) -> Result<Term, Stop> {
        Ok(k.read(self.irq))
    }
}
