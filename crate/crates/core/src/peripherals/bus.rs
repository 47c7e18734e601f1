//! Register storage and the two bus interfaces: byte-addressed transactions
//! for TLM models, a clocked signal bus for RTL models.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{Exec, Stop};
use crate::kernel::{Ctx, Kernel, KernelError, SignalId, SimTime};
use crate::symarray::SymArray;
use crate::term::Term;

use super::{Access, Layout, Window};

pub const ADDR_WIDTH: u32 = 8;

/// Byte-addressed register file backing a TLM model.
#[derive(Debug, Clone)]
pub struct RegisterFile {
    pub mem: SymArray,
    layout: &'static Layout,
}

impl RegisterFile {
    pub fn new(layout: &'static Layout) -> RegisterFile {
        RegisterFile {
            mem: SymArray::new(0, layout.size as usize, ADDR_WIDTH),
            layout,
        }
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    fn at(addr: u64) -> Term {
        Term::lit(ADDR_WIDTH, addr)
    }

    /// Stores a 32-bit value little-endian at a constant address.
    pub fn store_word(&mut self, addr: u64, value: &Term) -> Result<(), Stop> {
        Ok(self.mem.write_le(&Self::at(addr), value)?)
    }

    pub fn store(&mut self, name: &str, value: &Term) -> Result<(), Stop> {
        self.store_word(self.layout.offset(name), value)
    }

    pub fn store_byte(&mut self, addr: u64, value: &Term) -> Result<(), Stop> {
        Ok(self.mem.write(&Self::at(addr), value)?)
    }

    pub fn load_word(&self, e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        e.read_le(&self.mem, &Self::at(addr), 4)
    }

    pub fn load(&self, e: &mut Exec, name: &str) -> Result<Term, Stop> {
        self.load_word(e, self.layout.offset(name))
    }

    pub fn load_byte(&self, e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        e.read(&self.mem, &Self::at(addr))
    }

    /// Bounds-checked write of `data` bytes starting at a possibly symbolic
    /// address.
    pub fn write_bytes(&mut self, e: &mut Exec, addr: &Term, data: &[Term]) -> Result<(), Stop> {
        e.check_bounds(addr, data.len() as u64, 0, self.layout.size, "regfile.write")?;
        for (k, b) in data.iter().enumerate() {
            let at = addr.add(&Self::at(k as u64))?;
            self.mem.write(&at, b)?;
        }
        Ok(())
    }

    pub fn read_bytes(&self, e: &mut Exec, addr: &Term, len: u64) -> Result<Term, Stop> {
        e.check_bounds(addr, len, 0, self.layout.size, "regfile.read")?;
        e.read_le(&self.mem, addr, len as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmd {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Response {
    Ok,
    AddressError,
    LengthError,
}

#[derive(Debug, Clone)]
pub struct TlmTransaction {
    pub cmd: Cmd,
    pub addr: Term,
    /// Requested byte count; may be symbolic.
    pub length: Term,
    /// Write payload, least significant byte first. Only the first `length`
    /// bytes are used. Reads fill it in.
    pub data: Vec<Term>,
    pub response: Response,
}

impl TlmTransaction {
    pub fn read(addr: Term, length: Term) -> TlmTransaction {
        TlmTransaction {
            cmd: Cmd::Read,
            addr,
            length,
            data: Vec::new(),
            response: Response::Ok,
        }
    }

    pub fn write(addr: Term, length: Term, data: Vec<Term>) -> TlmTransaction {
        TlmTransaction {
            cmd: Cmd::Write,
            addr,
            length,
            data,
            response: Response::Ok,
        }
    }

    /// Little-endian value of the data bytes.
    pub fn value(&self) -> Result<Term, Stop> {
        let mut acc: Option<Term> = None;
        for b in &self.data {
            acc = Some(match acc {
                None => b.clone(),
                Some(low) => b.concat(&low)?,
            });
        }
        acc.ok_or_else(|| Stop::Fault("empty transaction payload".into()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeOptions {
    /// Validation failures become assertion failures.
    pub assert_style: bool,
    /// Only `addr < size` is checked and the window is chosen by start
    /// address.
    pub loose_bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Accept { window: usize, len: u64 },
    Reject(Response),
}

fn reject(e: &mut Exec, opt: DecodeOptions, resp: Response, site: &str) -> Result<Decoded, Stop> {
    if opt.assert_style {
        e.check_assert(&Term::bool(false), site)?;
    }
    Ok(Decoded::Reject(resp))
}

/// Validates length, alignment, window membership and access mode, forking
/// once per feasible outcome.
pub fn decode(e: &mut Exec, layout: &Layout, txn: &TlmTransaction, opt: DecodeOptions) -> Result<Decoded, Stop> {
    let lw = txn.length.width();
    let mut len = None;
    for l in [1u64, 2, 4] {
        if l <= crate::term::mask(lw) && e.branch(&txn.length.eq(&Term::lit(lw, l))?)? {
            len = Some(l);
            break;
        }
    }
    let Some(len) = len else {
        return reject(e, opt, Response::LengthError, "tlm.length");
    };
    if txn.cmd == Cmd::Write && txn.data.len() < len as usize {
        return Err(Stop::Fault("write payload shorter than length".into()));
    }
    let addr = &txn.addr;
    let w = addr.width();
    let lit = |v: u64| Term::lit(w, v);
    if opt.loose_bounds {
        if !e.branch(&addr.ult(&lit(layout.size))?)? {
            return reject(e, opt, Response::AddressError, "tlm.address");
        }
    } else if len > 1 {
        let aligned = addr.and(&lit(len - 1))?.eq(&lit(0))?;
        if !e.branch(&aligned)? {
            return reject(e, opt, Response::AddressError, "tlm.align");
        }
    }
    let mut found = None;
    for (i, win) in layout.registers.iter().enumerate() {
        let last = if opt.loose_bounds {
            win.end() - 1
        } else {
            win.end() - len
        };
        let inside = lit(win.offset).ule(addr)?.and(&addr.ule(&lit(last))?)?;
        if e.branch(&inside)? {
            found = Some(i);
            break;
        }
    }
    let Some(i) = found else {
        return reject(e, opt, Response::AddressError, "tlm.window");
    };
    if txn.cmd == Cmd::Write && layout.registers[i].access == Access::RO {
        return reject(e, opt, Response::AddressError, "tlm.readonly");
    }
    Ok(Decoded::Accept { window: i, len })
}

/// Signal bundle of the RTL register bus.
#[derive(Debug, Clone, Copy)]
pub struct RtlBus {
    pub clk: SignalId,
    pub addr: SignalId,
    pub wdata: SignalId,
    pub rdata: SignalId,
    pub we: SignalId,
    pub re: SignalId,
    pub ready: SignalId,
}

pub const CLOCK_PERIOD: SimTime = 2;

impl RtlBus {
    pub fn new(k: &mut Kernel, prefix: &str) -> Result<RtlBus, KernelError> {
        let clk = k.clock(&format!("{prefix}.clk"), CLOCK_PERIOD, 50)?;
        let mut sig = |n: &str, w: u32| k.signal(&format!("{prefix}.{n}"), Term::lit(w, 0));
        Ok(RtlBus {
            clk,
            addr: sig("addr", ADDR_WIDTH),
            wdata: sig("wdata", 32),
            rdata: sig("rdata", 32),
            we: sig("we", 1),
            re: sig("re", 1),
            ready: sig("ready", 1),
        })
    }

    /// Advances one full clock period from the testbench.
    pub fn cycle(&self, k: &mut Kernel, e: &mut Exec) -> Result<(), Stop> {
        let until = k.now() + CLOCK_PERIOD;
        k.run(e, until)?.ok()?;
        Ok(())
    }

    pub fn write(&self, k: &mut Kernel, e: &mut Exec, addr: &Term, data: &Term) -> Result<(), Stop> {
        k.write(e, self.addr, addr)?;
        k.write(e, self.wdata, data)?;
        k.write(e, self.we, &Term::lit(1, 1))?;
        self.cycle(k, e)?;
        k.write(e, self.we, &Term::lit(1, 0))?;
        Ok(())
    }

    pub fn read(&self, k: &mut Kernel, e: &mut Exec, addr: &Term) -> Result<Term, Stop> {
        k.write(e, self.addr, addr)?;
        k.write(e, self.re, &Term::lit(1, 1))?;
        self.cycle(k, e)?;
        k.write(e, self.re, &Term::lit(1, 0))?;
        Ok(k.read(self.rdata))
    }
}

/// One 32-bit signal per mapped word.
#[derive(Debug, Clone)]
pub struct RegBank {
    words: BTreeMap<u64, SignalId>,
    layout: &'static Layout,
}

impl RegBank {
    pub fn new(k: &mut Kernel, layout: &'static Layout, prefix: &str) -> RegBank {
        let mut words = BTreeMap::new();
        for w in &layout.registers {
            for a in w.words() {
                let name = if w.width == 4 {
                    format!("{prefix}.{}", w.name)
                } else {
                    format!("{prefix}.{}+{}", w.name, a - w.offset)
                };
                words.insert(a, k.signal(&name, Term::lit(32, 0)));
            }
        }
        RegBank { words, layout }
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn word(&self, addr: u64) -> SignalId {
        self.words[&addr]
    }

    pub fn sig(&self, name: &str) -> SignalId {
        self.word(self.layout.offset(name))
    }

    pub fn addresses(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.keys().copied()
    }

    pub fn window_of(&self, addr: u64) -> &'static Window {
        self.layout.window_at(addr).expect("mapped word")
    }
}

/// What the RTL bus asks for in the current cycle.
#[derive(Debug, Clone)]
pub enum BusOp {
    Idle,
    /// `word` is None for unmapped addresses.
    Write { word: Option<u64>, data: Term },
    Read { word: Option<u64> },
}

/// Address decoder shared by the RTL models: compares the bus address
/// against every mapped word.
pub fn rtl_decode(ctx: &mut Ctx, bus: &RtlBus, bank: &RegBank) -> Result<BusOp, Stop> {
    let one = Term::lit(1, 1);
    let we_c = ctx.read(bus.we).eq(&one)?;
    let re_c = ctx.read(bus.re).eq(&one)?;
    let we = ctx.exec().branch(&we_c)?;
    let re = !we && ctx.exec().branch(&re_c)?;
    if !we && !re {
        return Ok(BusOp::Idle);
    }
    let addr = ctx.read(bus.addr);
    let mut word = None;
    for a in bank.addresses() {
        if ctx.exec().branch(&addr.eq(&Term::lit(ADDR_WIDTH, a))?)? {
            word = Some(a);
            break;
        }
    }
    Ok(if we {
        BusOp::Write {
            word,
            data: ctx.read(bus.wdata),
        }
    } else {
        BusOp::Read { word }
    })
}

/// Default register behaviour: RW words take the data, RO words and unmapped
/// addresses ignore writes, unmapped reads return zero.
pub fn rtl_default_access(ctx: &mut Ctx, bus: &RtlBus, bank: &RegBank, op: &BusOp) -> Result<(), Stop> {
    match op {
        BusOp::Idle => ctx.write(bus.ready, &Term::lit(1, 0)),
        BusOp::Write { word, data } => {
            if let Some(a) = word {
                if bank.window_of(*a).access == Access::RW {
                    ctx.write(bank.word(*a), data)?;
                }
            }
            ctx.write(bus.ready, &Term::lit(1, 1))
        }
        BusOp::Read { word } => {
            let v = match word {
                Some(a) => ctx.read(bank.word(*a)),
                None => Term::lit(32, 0),
            };
            ctx.write(bus.rdata, &v)?;
            ctx.write(bus.ready, &Term::lit(1, 1))
        }
    }
}

/// Default TLM access: decode, then read or write the register file.
/// Returns the accessed window index, or None when the transaction was
/// rejected with an error response.
pub fn tlm_access(
    e: &mut Exec,
    rf: &mut RegisterFile,
    txn: &mut TlmTransaction,
    opt: DecodeOptions,
) -> Result<Option<usize>, Stop> {
    match decode(e, rf.layout(), txn, opt)? {
        Decoded::Reject(r) => {
            txn.response = r;
            Ok(None)
        }
        Decoded::Accept { window, len } => {
            match txn.cmd {
                Cmd::Write => {
                    let bytes = txn.data[..len as usize].to_vec();
                    rf.write_bytes(e, &txn.addr, &bytes)?;
                    txn.data = bytes;
                }
                Cmd::Read => {
                    e.check_bounds(&txn.addr, len, 0, rf.layout().size, "regfile.read")?;
                    let mut data = Vec::new();
                    for k in 0..len {
                        let at = txn.addr.add(&Term::lit(ADDR_WIDTH, k))?;
                        data.push(e.read(&rf.mem, &at)?);
                    }
                    txn.data = data;
                }
            }
            txn.response = Response::Ok;
            Ok(Some(window))
        }
    }
}

/// Shared handle on a TLM register file.
#[derive(Debug, Clone)]
pub struct TlmRegs(pub std::rc::Rc<std::cell::RefCell<RegisterFile>>);

impl TlmRegs {
    pub fn new(layout: &'static Layout) -> TlmRegs {
        TlmRegs(std::rc::Rc::new(std::cell::RefCell::new(RegisterFile::new(layout))))
    }

    pub fn inject(&self, name: &str, value: &Term) -> Result<(), Stop> {
        self.0.borrow_mut().store(name, value)
    }

    pub fn inject_byte(&self, addr: u64, value: &Term) -> Result<(), Stop> {
        self.0.borrow_mut().store_byte(addr, value)
    }

    pub fn peek_word(&self, e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        self.0.borrow().load_word(e, addr)
    }

    pub fn peek_byte(&self, e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        self.0.borrow().load_byte(e, addr)
    }

    pub fn load(&self, e: &mut Exec, name: &str) -> Result<Term, Stop> {
        self.0.borrow().load(e, name)
    }

    pub fn store(&self, name: &str, value: &Term) -> Result<(), Stop> {
        self.0.borrow_mut().store(name, value)
    }
}

impl RegBank {
    pub fn inject(&self, k: &mut Kernel, name: &str, value: &Term) -> Result<(), Stop> {
        Ok(k.inject(self.sig(name), value.clone())?)
    }

    pub fn inject_byte(&self, k: &mut Kernel, addr: u64, value: &Term) -> Result<(), Stop> {
        let word = addr & !3;
        let sig = *self.words.get(&word).ok_or_else(|| Stop::Fault(format!("unmapped byte {addr:#x}")))?;
        let v = super::splice_byte(&k.read(sig), (addr - word) as u32, value)?;
        Ok(k.inject(sig, v)?)
    }

    pub fn peek_word(&self, k: &Kernel, addr: u64) -> Term {
        k.read(self.word(addr))
    }
}
