//! Subtraction-based GCD. The datapath is `width` bits wide; IN_A and IN_B
//! hold zero-extended operands in their low bits.

use std::cell::RefCell;
use std::rc::Rc;

use crate::engine::{Exec, Stop};
use crate::kernel::{SignalId, EventId, Kernel, Trigger};
use crate::term::{OperatorTag, Term};

use super::bus::{rtl_decode, rtl_default_access, tlm_access, Cmd, DecodeOptions, RegBank, RtlBus, TlmRegs, TlmTransaction};
use super::mutation::MutationTable;
use super::{Level, Model, Peripheral, Variant};

pub const DESK_WIDTH: u32 = 4;

pub fn gcd_reference(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Division-based Euclid over terms.
pub fn gcd_reference_term(e: &mut Exec, a: &Term, b: &Term) -> Result<Term, Stop> {
    let zero = Term::lit(b.width(), 0);
    let (mut x, mut y) = (a.clone(), b.clone());
    while e.branch(&y.ne(&zero)?)? {
        let r = e.checked_urem(&x, &y, "gcd.reference")?;
        x = y;
        y = r;
    }
    Ok(x)
}

fn start_requested(e: &mut Exec, ops: &MutationTable, ctrl: &Term) -> Result<bool, Stop> {
    let bit = ops.op(e, "start.and", &[ctrl.clone(), Term::lit(32, 1)])?;
    let go = ops.op(e, "start.ne", &[bit, Term::lit(32, 0)])?;
    e.branch(&go)
}

/// One loop iteration; returns false once a == b.
fn step(e: &mut Exec, ops: &MutationTable, cmp: OperatorTag, a: &mut Term, b: &mut Term) -> Result<bool, Stop> {
    let ne = ops.op(e, "loop.ne", &[a.clone(), b.clone()])?;
    if !e.branch(&ne)? {
        return Ok(false);
    }
    let lt = ops.op_as(e, "cmp.ult", cmp, &[b.clone(), a.clone()])?;
    if e.branch(&lt)? {
        *a = ops.op(e, "sub.a", &[a.clone(), b.clone()])?;
    } else {
        *b = ops.op(e, "sub.b", &[b.clone(), a.clone()])?;
    }
    Ok(true)
}

fn operand(word: &Term, width: u32) -> Result<Term, Stop> {
    Ok(word.extract(width - 1, 0)?)
}

pub struct GcdTlm {
    regs: TlmRegs,
    ctrl_ev: EventId,
    opts: DecodeOptions,
}

impl GcdTlm {
    pub fn build(k: &mut Kernel, variant: &Variant, width: u32) -> Result<GcdTlm, Stop> {
        let regs = TlmRegs::new(Peripheral::Gcd.layout());
        let ctrl_ev = k.event("gcd.tlm.ctrl");
        let ops = variant.table(Peripheral::Gcd, Level::Tlm);
        let cmp = if variant.has("signed-compare") {
            OperatorTag::Slt
        } else {
            OperatorTag::Ult
        };
        let r = regs.clone();
        let mut ab = (Term::lit(width, 0), Term::lit(width, 0));
        k.thread("gcd.tlm", &[], false, move |ctx, label| {
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
                    ab = (operand(&r.load(e, "IN_A")?, width)?, operand(&r.load(e, "IN_B")?, width)?);
                }
                _ => {}
            }
            let e = ctx.exec();
            if step(e, &ops, cmp, &mut ab.0, &mut ab.1)? {
                return ctx.wait_time(1, 2);
            }
            r.store("RESULT", &ab.0.zext(32)?)?;
            r.store("STATUS", &Term::lit(32, 1))?;
            ctx.wait_event(ctrl_ev, 1)
        })?;
        Ok(GcdTlm {
            regs,
            ctrl_ev,
            opts: DecodeOptions {
                assert_style: variant.has("assert-style"),
                loose_bounds: false,
            },
        })
    }
}

impl Model for GcdTlm {
    fn peripheral(&self) -> Peripheral {
        Peripheral::Gcd
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

pub struct GcdRtl {
    pub bus: RtlBus,
    bank: RegBank,
}

impl GcdRtl {
    pub fn build(k: &mut Kernel, variant: &Variant, width: u32) -> Result<GcdRtl, Stop> {
        let bus = RtlBus::new(k, "gcd.rtl")?;
        let bank = RegBank::new(k, Peripheral::Gcd.layout(), "gcd.rtl");
        let ops = variant.table(Peripheral::Gcd, Level::Rtl);
        let (b2, bk) = (bus, bank.clone());
        let state = Rc::new(RefCell::new(None::<(Term, Term)>));
        k.method("gcd.rtl", &[Trigger::Posedge(bus.clk)], true, move |ctx| {
            let op = rtl_decode(ctx, &b2, &bk)?;
            rtl_default_access(ctx, &b2, &bk, &op)?;
            let mut st = state.borrow_mut();
            match st.as_mut() {
                None => {
                    let ctrl = ctx.read(bk.sig("CTRL"));
                    if start_requested(ctx.exec(), &ops, &ctrl)? {
                        let a = operand(&ctx.read(bk.sig("IN_A")), width)?;
                        let b = operand(&ctx.read(bk.sig("IN_B")), width)?;
                        *st = Some((a, b));
                        ctx.write(bk.sig("CTRL"), &Term::lit(32, 0))?;
                        ctx.write(bk.sig("STATUS"), &Term::lit(32, 0))?;
                    }
                }
                Some((a, b)) => {
                    if !step(ctx.exec(), &ops, OperatorTag::Ult, a, b)? {
                        let res = a.zext(32)?;
                        ctx.write(bk.sig("RESULT"), &res)?;
                        ctx.write(bk.sig("STATUS"), &Term::lit(32, 1))?;
                        *st = None;
                    }
                }
            }
            Ok(())
        })?;
        Ok(GcdRtl { bus, bank })
    }
}

impl Model for GcdRtl {
    fn rtl_bus(&self) -> Option<RtlBus> {
        Some(self.bus)
    }

    fn reg_signal(&self, name: &str) -> Option<SignalId> {
        Some(self.bank.sig(name))
    }

    fn peripheral(&self) -> Peripheral {
        Peripheral::Gcd
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(gcd_reference(6, 4), 2);
        assert_eq!(gcd_reference(7, 7), 7);
        assert_eq!(gcd_reference(15, 1), 1);
        assert_eq!(gcd_reference(0, 9), 9);
    }
}
