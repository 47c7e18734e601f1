//! Interface scenarios: one bus transaction with a symbolic address (and
//! length and data at TLM), then the full register state is checked.

use crate::engine::{Exec, Stop};
use crate::kernel::Kernel;
use crate::peripherals::bus::{Cmd, Response, TlmTransaction};
use crate::peripherals::{Access, Layout, Level, Model, Peripheral, Variant, Window};
use crate::term::Term;

use super::tb::build_model;
use super::Scenario;

/// Preloaded byte at `x`. Every byte is even so no start bit is set.
fn pattern(x: u64) -> u64 {
    (x * 7 + 2) & 0xfe
}

/// Byte at `x` after setup; unmapped bytes stay zero.
fn initial(layout: &Layout, x: u64) -> u64 {
    if layout.window_at(x).is_some() {
        pattern(x)
    } else {
        0
    }
}

fn pattern_word(w: u64) -> u64 {
    (0..4).map(|i| pattern(w + i) << (8 * i)).sum()
}

fn setup(k: &mut Kernel, s: &Scenario, v: &Variant) -> Result<Box<dyn Model>, Stop> {
    let level = s.level.ok_or_else(|| Stop::Fault(format!("{} has no level", s.name)))?;
    let m = build_model(k, s.peripheral, level, v, s.width)?;
    let layout = s.peripheral.layout();
    for x in (0..layout.size).filter(|&x| layout.window_at(x).is_some()) {
        m.inject_byte(k, x, &Term::lit(8, pattern(x)))?;
    }
    Ok(m)
}

fn a8(v: u64) -> Term {
    Term::lit(8, v)
}

/// `lo <= addr <= hi` over the 8-bit address.
fn within(addr: &Term, lo: u64, hi: u64) -> Result<Term, Stop> {
    Ok(a8(lo).ule(addr)?.and(&addr.ule(&a8(hi))?)?)
}

fn in_window(addr: &Term, w: &Window) -> Result<Term, Stop> {
    within(addr, w.offset, w.end() - 1)
}

/// Register whose write has a side effect beyond storing the data.
fn write_special(p: Peripheral, w: &Window) -> bool {
    p == Peripheral::Plic && w.name.starts_with("PRIORITY")
}

/// Reads of CLAIM return a computed id and clear a PENDING bit.
fn claim_window(p: Peripheral, layout: &Layout) -> Option<&Window> {
    (p == Peripheral::Plic).then(|| layout.get("CLAIM"))
}

/// Expected acceptance of a TLM transaction: (length valid, address valid).
fn tlm_validity(layout: &Layout, cmd: Cmd, addr: &Term, len: &Term) -> Result<(Term, Term), Stop> {
    let lw = len.width();
    let mut len_ok = Term::bool(false);
    let mut addr_ok = Term::bool(false);
    for l in [1u64, 2, 4] {
        let is_l = len.eq(&Term::lit(lw, l))?;
        len_ok = len_ok.or(&is_l)?;
        let aligned = addr.and(&a8(l - 1))?.eq(&a8(0))?;
        let mut fits = Term::bool(false);
        for w in &layout.registers {
            if cmd == Cmd::Write && w.access == Access::RO {
                continue;
            }
            fits = fits.or(&within(addr, w.offset, w.end() - l)?)?;
        }
        addr_ok = addr_ok.or(&is_l.and(&aligned)?.and(&fits)?)?;
    }
    Ok((len_ok, addr_ok))
}

fn check_response(e: &mut Exec, resp: Response, len_ok: &Term, addr_ok: &Term) -> Result<(), Stop> {
    let expect = match resp {
        Response::Ok => len_ok.and(addr_ok)?,
        Response::LengthError => len_ok.not()?,
        Response::AddressError => len_ok.and(&addr_ok.not()?)?,
    };
    e.observe("response", &Term::lit(2, resp as u64));
    e.check_assert(&expect, "iface.response")
}

pub fn read(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    match s.level {
        Some(Level::Tlm) => tlm_read(e, s, v),
        _ => rtl_read(e, s, v),
    }
}

pub fn write(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    match s.level {
        Some(Level::Tlm) => tlm_write(e, s, v),
        _ => rtl_write(e, s, v),
    }
}

fn tlm_read(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let (addr, len) = (inp["addr"].clone(), inp["len"].clone());
    let layout = s.peripheral.layout();
    let mut k = Kernel::new();
    let m = setup(&mut k, s, v)?;
    let mut txn = TlmTransaction::read(addr.clone(), len.clone());
    m.transport(&mut k, e, &mut txn)?;
    let (len_ok, addr_ok) = tlm_validity(layout, Cmd::Read, &addr, &len)?;
    check_response(e, txn.response, &len_ok, &addr_ok)?;
    let claimed = match claim_window(s.peripheral, layout) {
        Some(w) if txn.response == Response::Ok => in_window(&addr, w)?,
        _ => Term::bool(false),
    };
    if txn.response == Response::Ok {
        for (i, got) in txn.data.iter().enumerate() {
            let at = addr.add(&a8(i as u64))?;
            let mut expect = a8(0);
            for x in (0..layout.size).rev() {
                expect = at.eq(&a8(x))?.ite(&a8(initial(layout, x)), &expect)?;
            }
            e.observe(&format!("data{i}"), got);
            e.check_assert(&claimed.or(&got.eq(&expect)?)?, "iface.data")?;
        }
    }
    for x in 0..layout.size {
        let after = m.peek_byte(&k, e, x)?;
        let same = after.eq(&a8(initial(layout, x)))?;
        let pending = s.peripheral == Peripheral::Plic && layout.get("PENDING").contains(x);
        let ok = if pending { claimed.or(&same)? } else { same };
        e.check_assert(&ok, "iface.unchanged")?;
    }
    Ok(())
}

fn tlm_write(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let (addr, len) = (inp["addr"].clone(), inp["len"].clone());
    let data = (0..4).map(|i| inp[&format!("d{i}")].zext(8)).collect::<Result<Vec<_>, _>>()?;
    let layout = s.peripheral.layout();
    let mut k = Kernel::new();
    let m = setup(&mut k, s, v)?;
    let mut txn = TlmTransaction::write(addr.clone(), len.clone(), data.clone());
    m.transport(&mut k, e, &mut txn)?;
    let (len_ok, addr_ok) = tlm_validity(layout, Cmd::Write, &addr, &len)?;
    check_response(e, txn.response, &len_ok, &addr_ok)?;
    let written = txn.response == Response::Ok;
    let hit_at = |x: u64| -> Result<Term, Stop> {
        let mut hit = Term::bool(false);
        for i in 0..4u64 {
            let h = Term::lit(len.width(), i).ult(&len)?.and(&addr.add(&a8(i))?.eq(&a8(x))?)?;
            hit = hit.or(&h)?;
        }
        Ok(hit)
    };
    for x in 0..layout.size {
        let before = a8(initial(layout, x));
        let after = m.peek_byte(&k, e, x)?;
        if !written {
            e.check_assert(&after.eq(&before)?, "iface.unchanged")?;
            continue;
        }
        let win = layout.window_at(x);
        if let Some(w) = win.filter(|w| write_special(s.peripheral, w)) {
            // The side effect rewrites the whole register.
            let mut hit = Term::bool(false);
            for y in w.offset..w.end() {
                hit = hit.or(&hit_at(y)?)?;
            }
            e.check_assert(&hit.or(&after.eq(&before)?)?, "iface.unchanged")?;
            continue;
        }
        let mut expect = before.clone();
        for (i, d) in data.iter().enumerate().rev() {
            let h = Term::lit(len.width(), i as u64).ult(&len)?.and(&addr.add(&a8(i as u64))?.eq(&a8(x))?)?;
            expect = h.ite(d, &expect)?;
        }
        e.check_assert(&after.eq(&expect)?, "iface.written")?;
    }
    Ok(())
}

fn rtl_read(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let addr = inp["addr"].clone();
    let layout = s.peripheral.layout();
    let mut k = Kernel::new();
    let m = setup(&mut k, s, v)?;
    let bus = m.rtl_bus().ok_or_else(|| Stop::Fault("RTL model without bus".into()))?;
    let got = bus.read(&mut k, e, &addr)?;
    e.observe("data", &got);
    let mut expect = Term::lit(32, 0);
    for w in layout.word_addresses().into_iter().rev() {
        expect = addr.eq(&a8(w))?.ite(&Term::lit(32, pattern_word(w)), &expect)?;
    }
    let claimed = match claim_window(s.peripheral, layout) {
        Some(w) => addr.eq(&a8(w.offset))?,
        None => Term::bool(false),
    };
    e.check_assert(&claimed.or(&got.eq(&expect)?)?, "iface.data")?;
    for w in layout.word_addresses() {
        let same = m.peek_word(&k, e, w)?.eq(&Term::lit(32, pattern_word(w)))?;
        let pending = s.peripheral == Peripheral::Plic && layout.get("PENDING").contains(w);
        let ok = if pending { claimed.or(&same)? } else { same };
        e.check_assert(&ok, "iface.unchanged")?;
    }
    Ok(())
}

fn rtl_write(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let addr = inp["addr"].clone();
    let data = inp["data"].zext(32)?;
    let layout = s.peripheral.layout();
    let mut k = Kernel::new();
    let m = setup(&mut k, s, v)?;
    let bus = m.rtl_bus().ok_or_else(|| Stop::Fault("RTL model without bus".into()))?;
    // A start bit written to CTRL launches the core on the next edges;
    // that is the core's behavior, not the interface's.
    if let Some(ctrl) = layout.registers.iter().find(|w| w.name == "CTRL" && s.peripheral != Peripheral::Plic) {
        let start = addr.eq(&a8(ctrl.offset))?.and(&data.extract(0, 0)?.eq(&Term::lit(1, 1))?)?;
        e.assume(&start.not()?)?;
    }
    bus.write(&mut k, e, &addr, &data)?;
    for w in layout.word_addresses() {
        let before = Term::lit(32, pattern_word(w));
        let after = m.peek_word(&k, e, w)?;
        e.observe(&format!("word{w}"), &after);
        let hit = addr.eq(&a8(w))?;
        let win = layout.window_at(w).ok_or_else(|| Stop::Fault(format!("unmapped word {w}")))?;
        if win.access == Access::RO || write_special(s.peripheral, win) {
            let ok = if win.access == Access::RO {
                after.eq(&before)?
            } else {
                hit.or(&after.eq(&before)?)?
            };
            e.check_assert(&ok, "iface.unchanged")?;
        } else {
            e.check_assert(&after.eq(&hit.ite(&data, &before)?)?, "iface.written")?;
        }
    }
    Ok(())
}
