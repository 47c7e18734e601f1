//! Testbench building blocks shared by the scenarios.

use crate::engine::{Exec, PartialReason, Stop};
use crate::kernel::{Kernel, RunOutcome};
use crate::peripherals::bus::{TlmTransaction, CLOCK_PERIOD};
use crate::peripherals::gcd::{GcdRtl, GcdTlm};
use crate::peripherals::hash::{HashRtl, HashTlm};
use crate::peripherals::map::{MapRtl, MapTlm};
use crate::peripherals::plic::{PlicRtl, PlicTlm};
use crate::peripherals::{Level, Model, Peripheral, Variant};
use crate::term::Term;

pub fn build_model(k: &mut Kernel, p: Peripheral, level: Level, variant: &Variant, width: u32) -> Result<Box<dyn Model>, Stop> {
    Ok(match (p, level) {
        (Peripheral::Gcd, Level::Rtl) => Box::new(GcdRtl::build(k, variant, width)?),
        (Peripheral::Gcd, Level::Tlm) => Box::new(GcdTlm::build(k, variant, width)?),
        (Peripheral::Hash, Level::Rtl) => Box::new(HashRtl::build(k, variant)?),
        (Peripheral::Hash, Level::Tlm) => Box::new(HashTlm::build(k, variant)?),
        (Peripheral::Map, Level::Rtl) => Box::new(MapRtl::build(k, variant)?),
        (Peripheral::Map, Level::Tlm) => Box::new(MapTlm::build(k, variant)?),
        (Peripheral::Plic, Level::Rtl) => Box::new(PlicRtl::build(k, variant)?),
        (Peripheral::Plic, Level::Tlm) => Box::new(PlicTlm::build(k, variant)?),
    })
}

/// How a testbench hands inputs to a DUV.
pub enum InjectMode<'a> {
    /// Straight into register storage, no signal differ checks.
    DirectRegister(&'a [(&'a str, Term)]),
    /// Through the model's bus: one write per (address, word).
    BusTransaction(&'a [(u64, Term)]),
}

pub fn inject_inputs(k: &mut Kernel, e: &mut Exec, m: &dyn Model, mode: InjectMode) -> Result<(), Stop> {
    match mode {
        InjectMode::DirectRegister(regs) => {
            for (name, v) in regs {
                m.inject(k, name, v)?;
            }
        }
        InjectMode::BusTransaction(words) => {
            for (addr, v) in words {
                bus_write(k, e, m, &Term::lit(8, *addr), v)?;
            }
        }
    }
    Ok(())
}

/// One word write over the level's interface.
pub fn bus_write(k: &mut Kernel, e: &mut Exec, m: &dyn Model, addr: &Term, data: &Term) -> Result<(), Stop> {
    match m.rtl_bus() {
        Some(bus) => bus.write(k, e, addr, data),
        None => {
            let bytes = (0..4).map(|i| data.extract(8 * i + 7, 8 * i)).collect::<Result<Vec<_>, _>>()?;
            let mut txn = TlmTransaction::write(addr.clone(), Term::lit(3, 4), bytes);
            m.transport(k, e, &mut txn)
        }
    }
}

/// One word read over the level's interface.
pub fn bus_read(k: &mut Kernel, e: &mut Exec, m: &dyn Model, addr: &Term) -> Result<Term, Stop> {
    match m.rtl_bus() {
        Some(bus) => bus.read(k, e, addr),
        None => {
            let mut txn = TlmTransaction::read(addr.clone(), Term::lit(3, 4));
            m.transport(k, e, &mut txn)?;
            txn.value()
        }
    }
}

/// Advances one clock period.
pub fn cycle(k: &mut Kernel, e: &mut Exec) -> Result<RunOutcome, Stop> {
    let until = k.now() + CLOCK_PERIOD;
    k.run(e, until)?.ok()
}

/// Runs the kernel until the model reports completion. With `watchdog`
/// set, running longer than that many clock periods is an assertion
/// failure; without it a model that never finishes exhausts the step
/// budget.
pub fn wait_done(k: &mut Kernel, e: &mut Exec, m: &dyn Model, watchdog: Option<u64>) -> Result<(), Stop> {
    let mut periods = 0;
    let mut idle = false;
    loop {
        let done = m.finished(k, e)?;
        if e.branch(&done)? {
            return Ok(());
        }
        if idle {
            return e.check_assert(&Term::bool(false), "tb.idle");
        }
        if watchdog.is_some_and(|w| periods >= w) {
            return e.check_assert(&Term::bool(false), "tb.watchdog");
        }
        match cycle(k, e)? {
            RunOutcome::NoMoreActivity => idle = true,
            RunOutcome::StepBudgetExhausted => return Err(Stop::Partial(PartialReason::StepBudget)),
            RunOutcome::Finished => {}
        }
        periods += 1;
    }
}

pub fn kick_and_wait(k: &mut Kernel, e: &mut Exec, m: &dyn Model, watchdog: Option<u64>) -> Result<(), Stop> {
    m.kick(k, e)?;
    wait_done(k, e, m, watchdog)
}

pub fn lit(v: u64) -> Term {
    Term::lit(32, v)
}
