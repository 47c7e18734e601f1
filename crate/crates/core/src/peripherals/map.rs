//! Byte-lane map over a shared register array:
//! `out[i] = (in[i] + m) ^ rotl8(m, 1)`. CTRL bit 0 starts a run and clears
//! when the outputs are written.

use std::cell::RefCell;
use std::rc::Rc;

use crate::engine::{Exec, Stop};
use crate::kernel::{SignalId, EventId, Kernel, Trigger};
use crate::term::Term;

use super::bus::{
    rtl_decode, rtl_default_access, tlm_access, Cmd, DecodeOptions, RegBank, RtlBus, TlmRegs, TlmTransaction, ADDR_WIDTH, CLOCK_PERIOD,
};
use super::mutation::MutationTable;
use super::{splice_byte, Level, Model, Peripheral, Variant};

pub const LANES: u64 = 8;
pub const IN_BASE: u64 = 0x00;
pub const M_ADDR: u64 = 0x08;
pub const OUT_BASE: u64 = 0x10;

pub fn map_reference(inputs: [u8; 8], m: u8) -> [u8; 8] {
    inputs.map(|x| x.wrapping_add(m) ^ m.rotate_left(1))
}

fn rotl1(m: &Term) -> Result<Term, Stop> {
    Ok(m.extract(6, 0)?.concat(&m.extract(7, 7)?)?)
}

/// One lane with the TLM model's expression structure.
pub fn map_lane_term(x: &Term, m: &Term) -> Result<Term, Stop> {
    Ok(x.add(m)?.xor(&rotl1(m)?)?)
}

fn start_requested(e: &mut Exec, ops: &MutationTable, ctrl: &Term) -> Result<bool, Stop> {
    let bit = ops.op(e, "start.and", &[ctrl.clone(), Term::lit(32, 1)])?;
    let go = ops.op(e, "start.ne", &[bit, Term::lit(32, 0)])?;
    e.branch(&go)
}

fn more_lanes(e: &mut Exec, ops: &MutationTable, i: &Term) -> Result<bool, Stop> {
    let c = ops.op(e, "index.cmp", &[i.clone(), Term::lit(ADDR_WIDTH, LANES)])?;
    e.branch(&c)
}

fn lane_index(i: &Term) -> Result<u64, Stop> {
    i.as_const().ok_or_else(|| Stop::Fault("symbolic lane index".into()))
}

pub struct MapTlm {
    regs: TlmRegs,
    ctrl_ev: EventId,
    opts: DecodeOptions,
}

impl MapTlm {
    pub fn build(k: &mut Kernel, variant: &Variant) -> Result<MapTlm, Stop> {
        let regs = TlmRegs::new(Peripheral::Map.layout());
        let ctrl_ev = k.event("map.tlm.ctrl");
        let ops = variant.table(Peripheral::Map, Level::Tlm);
        let r = regs.clone();
        // One lane per clock period, like the RTL.
        let (mut m, mut i) = (Term::lit(8, 0), Term::lit(ADDR_WIDTH, 0));
        k.thread("map.tlm", &[], false, move |ctx, label| {
            let e = ctx.exec();
            match label {
                0 => return ctx.wait_event(ctrl_ev, 1),
                1 => {
                    let ctrl = r.load(e, "CTRL")?;
                    if !start_requested(e, &ops, &ctrl)? {
                        return ctx.wait_event(ctrl_ev, 1);
                    }
                    m = r.0.borrow().load_byte(e, M_ADDR)?;
                    i = Term::lit(ADDR_WIDTH, 0);
                }
                _ => {}
            }
            let e = ctx.exec();
            if more_lanes(e, &ops, &i)? {
                let at = i.add(&Term::lit(ADDR_WIDTH, IN_BASE))?;
                let mut rf = r.0.borrow_mut();
                let x = e.read(&rf.mem, &at)?;
                let sum = ops.op(e, "lane.add", &[x, m.clone()])?;
                let out = ops.op(e, "lane.xor", &[sum, rotl1(&m)?])?;
                let dst = ops.op(e, "lane.addr", &[Term::lit(ADDR_WIDTH, OUT_BASE), i.clone()])?;
                rf.write_bytes(e, &dst, &[out])?;
                i = ops.op(e, "index.inc", &[i.clone(), Term::lit(ADDR_WIDTH, 1)])?;
                return ctx.wait_time(CLOCK_PERIOD, 2);
            }
            r.store("CTRL", &Term::lit(32, 0))?;
            ctx.wait_event(ctrl_ev, 1)
        })?;
        Ok(MapTlm {
            regs,
            ctrl_ev,
            opts: DecodeOptions {
                assert_style: variant.has("assert-style"),
                loose_bounds: variant.has("bounds-check"),
            },
        })
    }
}

impl Model for MapTlm {
    fn peripheral(&self) -> Peripheral {
        Peripheral::Map
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

    fn finished(&self, k: &Kernel, e: &mut Exec) -> Result<Term, Stop> {
        Ok(self.peek(k, e, "CTRL")?.eq(&Term::lit(32, 0))?)
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

pub struct MapRtl {
    pub bus: RtlBus,
    bank: RegBank,
}

impl MapRtl {
    pub fn build(k: &mut Kernel, variant: &Variant) -> Result<MapRtl, Stop> {
        let bus = RtlBus::new(k, "map.rtl")?;
        let bank = RegBank::new(k, Peripheral::Map.layout(), "map.rtl");
        let ops = variant.table(Peripheral::Map, Level::Rtl);
        let (b2, bk) = (bus, bank.clone());
        // Lane counter while a run is active.
        let state: Rc<RefCell<Option<Term>>> = Rc::new(RefCell::new(None));
        k.method("map.rtl", &[Trigger::Posedge(bus.clk)], true, move |ctx| {
            let op = rtl_decode(ctx, &b2, &bk)?;
            rtl_default_access(ctx, &b2, &bk, &op)?;
            let mut st = state.borrow_mut();
            let Some(i) = st.as_mut() else {
                let ctrl = ctx.read(bk.sig("CTRL"));
                if start_requested(ctx.exec(), &ops, &ctrl)? {
                    *st = Some(Term::lit(ADDR_WIDTH, 0));
                }
                return Ok(());
            };
            if !more_lanes(ctx.exec(), &ops, i)? {
                *st = None;
                return ctx.write(bk.sig("CTRL"), &Term::lit(32, 0));
            }
            let lane = lane_index(i)?;
            let m = ctx.read(bk.sig("M")).extract(7, 0)?;
            // Lanes past the array read as zero and are not stored.
            let x = if lane < LANES {
                let w = ctx.read(bk.word(IN_BASE + (lane & !3)));
                let sh = 8 * (lane as u32 & 3);
                w.extract(sh + 7, sh)?
            } else {
                Term::lit(8, 0)
            };
            let e = ctx.exec();
            let hi = ops.op(e, "rot.shl", &[m.clone(), Term::lit(8, 1)])?;
            let lo = ops.op(e, "rot.lshr", &[m.clone(), Term::lit(8, 7)])?;
            let rot = ops.op(e, "rot.or", &[hi, lo])?;
            let sum = ops.op(e, "lane.add", &[x, m])?;
            let out = ops.op(e, "lane.xor", &[sum, rot])?;
            *i = ops.op(e, "index.inc", &[i.clone(), Term::lit(ADDR_WIDTH, 1)])?;
            if lane < LANES {
                let sig = bk.word(OUT_BASE + (lane & !3));
                let word = ctx.read(sig);
                ctx.write(sig, &splice_byte(&word, (lane & 3) as u32, &out)?)?;
            }
            Ok(())
        })?;
        Ok(MapRtl { bus, bank })
    }
}

impl Model for MapRtl {
    fn rtl_bus(&self) -> Option<RtlBus> {
        Some(self.bus)
    }

    fn reg_signal(&self, name: &str) -> Option<SignalId> {
        Some(self.bank.sig(name))
    }

    fn peripheral(&self) -> Peripheral {
        Peripheral::Map
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

    fn finished(&self, k: &Kernel, e: &mut Exec) -> Result<Term, Stop> {
        Ok(self.peek(k, e, "CTRL")?.eq(&Term::lit(32, 0))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mask_is_identity() {
        let x = [0, 1, 2, 0x7f, 0x80, 0xfe, 0xff, 3];
        assert_eq!(map_reference(x, 0), x);
    }

    #[test]
    fn frozen_values() {
        let x = [0, 1, 2, 3, 0x80, 0xfe, 0xff, 0x7f];
        assert_eq!(map_reference(x, 0x81), [0x82, 0x81, 0x80, 0x87, 0x02, 0x7c, 0x83, 0x03]);
    }
}
