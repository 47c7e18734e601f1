//! Functional scenarios: inputs go straight into the registers and the
//! outputs are checked against a reference or against the other level.

use std::collections::BTreeMap;

use crate::engine::{Exec, Stop};
use crate::kernel::Kernel;
use crate::peripherals::gcd::gcd_reference_term;
use crate::peripherals::hash::hash_reference_term;
use crate::peripherals::map::{map_lane_term, IN_BASE, LANES, M_ADDR, OUT_BASE};
use crate::peripherals::plic::priority_offset;
use crate::peripherals::{Level, Model, Peripheral, Variant};
use crate::term::Term;

use super::tb::{build_model, bus_read, bus_write, cycle, inject_inputs, kick_and_wait, lit, InjectMode};
use super::{Order, Scenario};

/// Clock periods a fixed-latency DUV may take before the testbench gives up.
const WATCHDOG: u64 = 16;

fn standalone(k: &mut Kernel, s: &Scenario, p: Peripheral, v: &Variant) -> Result<Box<dyn Model>, Stop> {
    let level = s.level.ok_or_else(|| Stop::Fault(format!("{} has no level", s.name)))?;
    build_model(k, p, level, v, s.width)
}

/// Both levels in one kernel, in testbench phase order.
fn both(k: &mut Kernel, s: &Scenario, p: Peripheral, v: &Variant) -> Result<[Box<dyn Model>; 2], Stop> {
    let tlm = build_model(k, p, Level::Tlm, v, s.width)?;
    let rtl = build_model(k, p, Level::Rtl, v, s.width)?;
    Ok(match s.order {
        Order::TlmFirst => [tlm, rtl],
        Order::RtlFirst => [rtl, tlm],
    })
}

fn tag(m: &dyn Model, label: &str) -> String {
    format!("{}.{}", m.level(), label)
}

pub fn signal_two_writes(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let mut k = Kernel::new();
    let m = standalone(&mut k, s, Peripheral::Gcd, v)?;
    for (reg, x) in [("IN_A", &inp["a"]), ("IN_B", &inp["b"])] {
        let sig = m.reg_signal(reg).ok_or_else(|| Stop::Fault("no register signal".into()))?;
        k.write(e, sig, &x.zext(32)?)?;
    }
    cycle(&mut k, e)?;
    Ok(())
}

pub fn signal_direct_inject(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let mut k = Kernel::new();
    let m = standalone(&mut k, s, Peripheral::Gcd, v)?;
    inject_inputs(&mut k, e, &*m, InjectMode::DirectRegister(&[("IN_A", inp["a"].zext(32)?), ("IN_B", inp["b"].zext(32)?)]))?;
    cycle(&mut k, e)?;
    Ok(())
}

fn gcd_inputs(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(Term, Term), Stop> {
    let inp = s.declare(e)?;
    let (a, b) = (inp["a"].clone(), inp["b"].clone());
    if !v.has("zero-input") {
        let zero = Term::lit(a.width(), 0);
        e.assume(&zero.ult(&a)?.and(&zero.ult(&b)?)?)?;
    }
    Ok((a, b))
}

/// Periods the bounded GCD scenarios allow: subtraction Euclid on
/// `width`-bit operands needs fewer than 2^width iterations.
fn gcd_watchdog(width: u32) -> u64 {
    8 << width
}

fn gcd_run(k: &mut Kernel, e: &mut Exec, m: &dyn Model, a: &Term, b: &Term, watchdog: Option<u64>) -> Result<Term, Stop> {
    let width = a.width();
    inject_inputs(k, e, m, InjectMode::DirectRegister(&[("IN_A", a.zext(32)?), ("IN_B", b.zext(32)?)]))?;
    kick_and_wait(k, e, m, watchdog)?;
    Ok(m.peek(k, e, "RESULT")?.extract(width - 1, 0)?)
}

fn gcd_standalone_with(e: &mut Exec, s: &Scenario, v: &Variant, watchdog: Option<u64>) -> Result<(), Stop> {
    let (a, b) = gcd_inputs(e, s, v)?;
    let mut k = Kernel::new();
    let m = standalone(&mut k, s, Peripheral::Gcd, v)?;
    let res = gcd_run(&mut k, e, &*m, &a, &b, watchdog)?;
    e.observe("result", &res);
    let expect = gcd_reference_term(e, &a, &b)?;
    e.check_assert(&res.eq(&expect)?, "gcd.result")
}

fn gcd_cross_with(e: &mut Exec, s: &Scenario, v: &Variant, watchdog: Option<u64>) -> Result<(), Stop> {
    let (a, b) = gcd_inputs(e, s, v)?;
    let mut k = Kernel::new();
    let models = both(&mut k, s, Peripheral::Gcd, v)?;
    let mut res = Vec::new();
    for m in &models {
        let r = gcd_run(&mut k, e, &**m, &a, &b, watchdog)?;
        e.observe(&tag(&**m, "result"), &r);
        res.push(r);
    }
    e.check_assert(&res[0].eq(&res[1])?, "cross.result")
}

/// Unbounded: a DUV that never finishes shows up as a partial path.
pub fn gcd_standalone(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    gcd_standalone_with(e, s, v, None)
}

pub fn gcd_cross(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    gcd_cross_with(e, s, v, None)
}

/// With a latency watchdog, so a DUV that never finishes is an error.
pub fn gcd_standalone_bounded(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    gcd_standalone_with(e, s, v, Some(gcd_watchdog(s.width)))
}

pub fn gcd_cross_bounded(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    gcd_cross_with(e, s, v, Some(gcd_watchdog(s.width)))
}

fn hash_run(k: &mut Kernel, e: &mut Exec, m: &dyn Model, a: &Term, b: &Term) -> Result<Term, Stop> {
    inject_inputs(k, e, m, InjectMode::DirectRegister(&[("IN_A", a.zext(32)?), ("IN_B", b.zext(32)?)]))?;
    kick_and_wait(k, e, m, Some(WATCHDOG))?;
    m.peek(k, e, "RESULT")
}

pub fn hash_standalone(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let mut k = Kernel::new();
    let m = standalone(&mut k, s, Peripheral::Hash, v)?;
    let res = hash_run(&mut k, e, &*m, &inp["a"], &inp["b"])?;
    e.observe("result", &res);
    // The reference reads the operands back exactly as the DUV sees them.
    let a = m.peek(&k, e, "IN_A")?;
    let b = m.peek(&k, e, "IN_B")?;
    let expect = hash_reference_term(&a, &b)?;
    e.check_assert(&res.eq(&expect)?, "hash.result")
}

pub fn hash_cross(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let mut k = Kernel::new();
    let models = both(&mut k, s, Peripheral::Hash, v)?;
    let mut res = Vec::new();
    for m in &models {
        let r = hash_run(&mut k, e, &**m, &inp["a"], &inp["b"])?;
        e.observe(&tag(&**m, "result"), &r);
        res.push(r);
    }
    e.check_assert(&res[0].eq(&res[1])?, "cross.result")
}

fn map_run(k: &mut Kernel, e: &mut Exec, m: &dyn Model, inp: &BTreeMap<String, Term>) -> Result<Vec<Term>, Stop> {
    for i in 0..LANES {
        m.inject_byte(k, IN_BASE + i, &inp[&format!("in{i}")].zext(8)?)?;
    }
    m.inject_byte(k, M_ADDR, &inp["m"].zext(8)?)?;
    kick_and_wait(k, e, m, Some(WATCHDOG))?;
    (0..LANES).map(|i| m.peek_byte(k, e, OUT_BASE + i)).collect()
}

pub fn map_standalone(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let mut k = Kernel::new();
    let m = standalone(&mut k, s, Peripheral::Map, v)?;
    let out = map_run(&mut k, e, &*m, &inp)?;
    let mask = m.peek_byte(&k, e, M_ADDR)?;
    for (i, o) in out.iter().enumerate() {
        e.observe(&format!("out{i}"), o);
    }
    for (i, o) in out.iter().enumerate() {
        let x = m.peek_byte(&k, e, IN_BASE + i as u64)?;
        e.check_assert(&o.eq(&map_lane_term(&x, &mask)?)?, "map.lane")?;
    }
    Ok(())
}

pub fn map_cross(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let mut k = Kernel::new();
    let models = both(&mut k, s, Peripheral::Map, v)?;
    let mut outs = Vec::new();
    for m in &models {
        let o = map_run(&mut k, e, &**m, &inp)?;
        for (i, x) in o.iter().enumerate() {
            e.observe(&tag(&**m, &format!("out{i}")), x);
        }
        outs.push(o);
    }
    for (x, y) in outs[0].iter().zip(&outs[1]) {
        e.check_assert(&x.eq(y)?, "cross.lane")?;
    }
    Ok(())
}

const CLAIM: u64 = 0x2c;

fn plic_addr(v: u64) -> Term {
    Term::lit(8, v)
}

/// Raises the given sources and lets the interrupt line settle.
fn plic_raise(k: &mut Kernel, e: &mut Exec, m: &dyn Model, sources: &[u32]) -> Result<(), Stop> {
    for &i in sources {
        m.raise(k, e, i)?;
    }
    if m.level() == Level::Rtl {
        cycle(k, e)?;
    }
    Ok(())
}

fn enable_mask(sources: &[u32]) -> u64 {
    sources.iter().map(|i| 1u64 << i).sum()
}

/// Claim sequence of the reference: highest priority above the threshold,
/// lowest id on ties.
fn claims_reference(prios: &[(u32, Term)], t: &Term, rounds: usize) -> Result<Vec<Term>, Stop> {
    let mut pending = vec![Term::bool(true); prios.len()];
    let mut out = Vec::new();
    for _ in 0..rounds {
        let mut best = lit(0);
        let mut best_p = Term::lit(t.width(), 0);
        for ((id, p), pend) in prios.iter().zip(&pending) {
            let take = pend.and(&t.ult(p)?)?.and(&best_p.ult(p)?)?;
            best = take.ite(&lit(*id as u64), &best)?;
            best_p = take.ite(p, &best_p)?;
        }
        for ((id, _), pend) in prios.iter().zip(pending.iter_mut()) {
            *pend = pend.and(&best.ne(&lit(*id as u64))?)?;
        }
        out.push(best);
    }
    Ok(out)
}

fn irq_reference(prios: &[(u32, Term)], t: &Term) -> Result<Term, Stop> {
    let mut any = Term::bool(false);
    for (_, p) in prios {
        any = any.or(&t.ult(p)?)?;
    }
    Ok(any)
}

/// Standalone PLIC check with priorities injected directly.
fn plic_check(e: &mut Exec, s: &Scenario, v: &Variant, names: &[(&str, u32)]) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let t = inp["t"].clone();
    let prios: Vec<(u32, Term)> = names.iter().map(|(n, i)| (*i, inp[*n].clone())).collect();
    let sources: Vec<u32> = prios.iter().map(|p| p.0).collect();
    let mut k = Kernel::new();
    let m = standalone(&mut k, s, Peripheral::Plic, v)?;
    let mut regs = vec![("THRESHOLD".to_string(), t.zext(32)?), ("ENABLE".to_string(), lit(enable_mask(&sources)))];
    for (i, p) in &prios {
        regs.push((format!("PRIORITY{i}"), p.zext(32)?));
    }
    let regs: Vec<(&str, Term)> = regs.iter().map(|(n, x)| (n.as_str(), x.clone())).collect();
    inject_inputs(&mut k, e, &*m, InjectMode::DirectRegister(&regs))?;
    plic_raise(&mut k, e, &*m, &sources)?;
    let irq = m.irq(&k, e)?;
    e.observe("irq", &irq);
    e.check_assert(&irq.eq(&irq_reference(&prios, &t)?)?, "plic.irq")?;
    let expect = claims_reference(&prios, &t, prios.len() + 1)?;
    for (n, x) in expect.iter().enumerate() {
        let c = bus_read(&mut k, e, &*m, &plic_addr(CLAIM))?;
        e.observe(&format!("claim{n}"), &c);
        e.check_assert(&c.eq(x)?, "plic.claim")?;
    }
    Ok(())
}

pub fn plic_threshold(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    plic_check(e, s, v, &[("p", 3)])
}

pub fn plic_priority(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    plic_check(e, s, v, &[("p2", 2), ("p5", 5), ("p7", 7)])
}

/// Priorities go through the bus, so both levels clamp them.
pub fn plic_cross(e: &mut Exec, s: &Scenario, v: &Variant) -> Result<(), Stop> {
    let inp = s.declare(e)?;
    let sources = [2u32, 5];
    let mut k = Kernel::new();
    let models = both(&mut k, s, Peripheral::Plic, v)?;
    let mut seen: Vec<Vec<Term>> = Vec::new();
    for m in &models {
        let m = &**m;
        inject_inputs(
            &mut k,
            e,
            m,
            InjectMode::DirectRegister(&[("THRESHOLD", inp["t"].zext(32)?), ("ENABLE", lit(enable_mask(&sources)))]),
        )?;
        for i in sources {
            bus_write(&mut k, e, m, &plic_addr(priority_offset(i)), &inp[&format!("p{i}")].zext(32)?)?;
        }
        plic_raise(&mut k, e, m, &sources)?;
        let irq = m.irq(&k, e)?;
        e.observe(&tag(m, "irq"), &irq);
        let mut obs = vec![irq];
        for n in 0..sources.len() + 1 {
            let c = bus_read(&mut k, e, m, &plic_addr(CLAIM))?;
            e.observe(&tag(m, &format!("claim{n}")), &c);
            obs.push(c);
        }
        seen.push(obs);
    }
    for (x, y) in seen[0].iter().zip(&seen[1]) {
        e.check_assert(&x.eq(y)?, "cross.plic")?;
    }
    Ok(())
}
