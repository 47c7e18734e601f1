//! Eight-round rotate/add hash of two words.

use std::cell::RefCell;
use std::rc::Rc;

use crate::engine::{Exec, Stop};
use crate::kernel::{SignalId, EventId, Kernel, Trigger};
use crate::term::Term;

use super::bus::{rtl_decode, rtl_default_access, tlm_access, Cmd, DecodeOptions, RegBank, RtlBus, TlmRegs, TlmTransaction, CLOCK_PERIOD};
use super::mutation::MutationTable;
use super::{Level, Model, Peripheral, Variant};

pub const SEED: u32 = 0x1234_5678;
pub const ROUNDS: u64 = 8;

pub fn hash_reference(a: u32, b: u32) -> u32 {
    let mut h = SEED;
    for r in 0..ROUNDS as u32 {
        h = (h ^ a).rotate_left(5).wrapping_add(b.wrapping_add(r));
    }
    h
}

/// Rotate left by 5 built from slices.
fn rotl5(x: &Term) -> Result<Term, Stop> {
    Ok(x.extract(26, 0)?.concat(&x.extract(31, 27)?)?)
}

/// Term form with the TLM model's expression structure.
pub fn hash_reference_term(a: &Term, b: &Term) -> Result<Term, Stop> {
    let mut h = Term::lit(32, SEED as u64);
    for r in 0..ROUNDS {
        let rot = rotl5(&h.xor(a)?)?;
        h = rot.add(&b.add(&Term::lit(32, r))?)?;
    }
    Ok(h)
}

fn start_requested(e: &mut Exec, ops: &MutationTable, ctrl: &Term) -> Result<bool, Stop> {
    let bit = ops.op(e, "start.and", &[ctrl.clone(), Term::lit(32, 1)])?;
    let go = ops.op(e, "start.ne", &[bit, Term::lit(32, 0)])?;
    e.branch(&go)
}

fn more_rounds(e: &mut Exec, ops: &MutationTable, r: &Term) -> Result<bool, Stop> {
    let c = ops.op(e, "count.cmp", &[r.clone(), Term::lit(32, ROUNDS)])?;
    e.branch(&c)
}

pub struct HashTlm {
    regs: TlmRegs,
    ctrl_ev: EventId,
    opts: DecodeOptions,
}

impl HashTlm {
    pub fn build(k: &mut Kernel, variant: &Variant) -> Result<HashTlm, Stop> {
        let regs = TlmRegs::new(Peripheral::Hash.layout());
        let ctrl_ev = k.event("hash.tlm.ctrl");
        let ops = variant.table(Peripheral::Hash, Level::Tlm);
        let r = regs.clone();
        // One round per clock period, like the RTL.
        let (mut a, mut b) = (Term::lit(32, 0), Term::lit(32, 0));
        let (mut h, mut n) = (Term::lit(32, 0), Term::lit(32, 0));
        k.thread("hash.tlm", &[], false, move |ctx, label| {
            let e = ctx.exec();
            match label {
                0 => return ctx.wait_event(ctrl_ev, 1),
                1 => {
                    let ctrl = r.load(e, "CTRL")?;
                    if !start_requested(e, &ops, &ctrl)? {
                        return ctx.wait_event(ctrl_ev, 1);
                    }
                    r.store("CTRL", &Term::lit(32, 0))?;
                    r.store("STATUS", &Term::lit(32, 0))?;
                    a = r.load(e, "IN_A")?;
                    b = r.load(e, "IN_B")?;
                    h = Term::lit(32, SEED as u64);
                    n = Term::lit(32, 0);
                }
                _ => {}
            }
            let e = ctx.exec();
            if more_rounds(e, &ops, &n)? {
                let x = ops.op(e, "round.xor", &[h.clone(), a.clone()])?;
                let br = ops.op(e, "round.badd", &[b.clone(), n.clone()])?;
                h = ops.op(e, "round.add", &[rotl5(&x)?, br])?;
                n = ops.op(e, "count.inc", &[n.clone(), Term::lit(32, 1)])?;
                return ctx.wait_time(CLOCK_PERIOD, 2);
            }
            r.store("RESULT", &h)?;
            r.store("STATUS", &Term::lit(32, 1))?;
            ctx.wait_event(ctrl_ev, 1)
        })?;
        Ok(HashTlm {
            regs,
            ctrl_ev,
            opts: DecodeOptions {
                assert_style: variant.has("assert-style"),
                loose_bounds: false,
            },
        })
    }
}

impl Model for HashTlm {
    fn peripheral(&self) -> Peripheral {
        Peripheral::Hash
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

    fn kick(&self, k: &mut Kernel, _e: &mut Exec) -> Result<(), Stop> {
        self.regs.inject("CTRL", &Term::lit(32, 1))?;
        k.notify(self.ctrl_ev, 0);
        Ok(())
    }

    fn transport(&self, k: &mut Kernel, e: &mut Exec, txn: &mut TlmTransaction) -> Result<(), Stop> {
        let mut rf = self.regs.0.borrow_mut();
        if let Some(w) = tlm_access(e, &mut rf, txn, self.opts)? {
            if txn.cmd == Cmd::Write && rf.layout().registers[w].name == "CTRL" {
                k.notify(self.ctrl_ev, 0);
            }
        }
        Ok(())
    }
}

struct Round {
    a: Term,
    b: Term,
    h: Term,
    n: Term,
}

pub struct HashRtl {
    pub bus: RtlBus,
    bank: RegBank,
}

impl HashRtl {
    pub fn build(k: &mut Kernel, variant: &Variant) -> Result<HashRtl, Stop> {
        let bus = RtlBus::new(k, "hash.rtl")?;
        let bank = RegBank::new(k, Peripheral::Hash.layout(), "hash.rtl");
        let ops = variant.table(Peripheral::Hash, Level::Rtl);
        let (b2, bk) = (bus, bank.clone());
        let state: Rc<RefCell<Option<Round>>> = Rc::new(RefCell::new(None));
        k.method("hash.rtl", &[Trigger::Posedge(bus.clk)], true, move |ctx| {
            let op = rtl_decode(ctx, &b2, &bk)?;
            rtl_default_access(ctx, &b2, &bk, &op)?;
            let mut st = state.borrow_mut();
            let Some(s) = st.as_mut() else {
                let ctrl = ctx.read(bk.sig("CTRL"));
                if start_requested(ctx.exec(), &ops, &ctrl)? {
                    *st = Some(Round {
                        a: ctx.read(bk.sig("IN_A")),
                        b: ctx.read(bk.sig("IN_B")),
                        h: Term::lit(32, SEED as u64),
                        n: Term::lit(32, 0),
                    });
                    ctx.write(bk.sig("CTRL"), &Term::lit(32, 0))?;
                    ctx.write(bk.sig("STATUS"), &Term::lit(32, 0))?;
                }
                return Ok(());
            };
            let e = ctx.exec();
            if more_rounds(e, &ops, &s.n)? {
                let x = ops.op(e, "round.xor", &[s.h.clone(), s.a.clone()])?;
                let hi = ops.op(e, "rot.shl", &[x.clone(), Term::lit(32, 5)])?;
                let lo = ops.op(e, "rot.lshr", &[x, Term::lit(32, 27)])?;
                let rot = ops.op(e, "rot.or", &[hi, lo])?;
                let br = ops.op(e, "round.badd", &[s.b.clone(), s.n.clone()])?;
                s.h = ops.op(e, "round.add", &[rot, br])?;
                s.n = ops.op(e, "count.inc", &[s.n.clone(), Term::lit(32, 1)])?;
            } else {
                let h = s.h.clone();
                *st = None;
                ctx.write(bk.sig("RESULT"), &h)?;
                ctx.write(bk.sig("STATUS"), &Term::lit(32, 1))?;
            }
            Ok(())
        })?;
        Ok(HashRtl { bus, bank })
    }
}

impl Model for HashRtl {
    fn rtl_bus(&self) -> Option<RtlBus> {
        Some(self.bus)
    }

    fn reg_signal(&self, name: &str) -> Option<SignalId> {
        Some(self.bank.sig(name))
    }

    fn peripheral(&self) -> Peripheral {
        Peripheral::Hash
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

    fn kick(&self, k: &mut Kernel, _e: &mut Exec) -> Result<(), Stop> {
        self.bank.inject(k, "CTRL", &Term::lit(32, 1))
    }
}
