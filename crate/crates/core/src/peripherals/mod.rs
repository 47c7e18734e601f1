//! The four peripherals, each modelled at register-transfer and transaction
//! level, plus their bus plumbing and mutation sites.

pub mod bus;
pub mod gcd;
pub mod hash;
pub mod map;
pub mod mutation;
pub mod plic;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::engine::{Exec, Stop};
use crate::kernel::{Kernel, SignalId};
use crate::term::Term;
use bus::{RtlBus, TlmTransaction};
use mutation::{Mutation, MutationTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Rtl,
    Tlm,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::Rtl, Level::Tlm];

    pub fn name(self) -> &'static str {
        match self {
            Level::Rtl => "rtl",
            Level::Tlm => "tlm",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        Level::ALL.into_iter().find(|l| l.name() == s.to_ascii_lowercase())
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Peripheral {
    Gcd,
    Hash,
    Map,
    Plic,
}

impl Peripheral {
    pub const ALL: [Peripheral; 4] = [Peripheral::Gcd, Peripheral::Hash, Peripheral::Map, Peripheral::Plic];

    pub fn name(self) -> &'static str {
        match self {
            Peripheral::Gcd => "gcd",
            Peripheral::Hash => "hash",
            Peripheral::Map => "map",
            Peripheral::Plic => "plic",
        }
    }

    pub fn parse(s: &str) -> Option<Peripheral> {
        Peripheral::ALL.into_iter().find(|p| p.name() == s.to_ascii_lowercase())
    }

    pub fn layout(self) -> &'static Layout {
        &layouts()[&self]
    }

    /// Seeded bug variants: (name, description).
    pub fn bug_variants(self) -> &'static [(&'static str, &'static str)] {
        const ASSERT_STYLE: (&str, &str) =
            ("assert-style", "TLM bus validation failures are assertions instead of error responses");
        match self {
            Peripheral::Gcd => &[
                ("signed-compare", "TLM loop compares with slt instead of ult"),
                ("zero-input", "testbench drops the a,b >= 1 guard; zero inputs never terminate"),
                ASSERT_STYLE,
            ],
            Peripheral::Hash => &[ASSERT_STYLE],
            Peripheral::Map => &[
                ("bounds-check", "TLM write handler checks only addr < size"),
                ASSERT_STYLE,
            ],
            Peripheral::Plic => &[
                ("threshold-inversion", "RTL asserts the line when priority <= threshold"),
                ("raw-priority", "TLM stores out-of-range priority writes without clamping"),
                ASSERT_STYLE,
            ],
        }
    }
}

impl fmt::Display for Peripheral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Access {
    RO,
    RW,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub name: String,
    pub offset: u64,
    pub width: u64,
    pub access: Access,
}

impl Window {
    pub fn end(&self) -> u64 {
        self.offset + self.width
    }

    pub fn contains(&self, addr: u64) -> bool {
        (self.offset..self.end()).contains(&addr)
    }

    /// Word addresses covered by the window.
    pub fn words(&self) -> impl Iterator<Item = u64> + '_ {
        (self.offset..self.end()).step_by(4)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub size: u64,
    pub registers: Vec<Window>,
}

impl Layout {
    pub fn get(&self, name: &str) -> &Window {
        self.registers
            .iter()
            .find(|w| w.name == name)
            .unwrap_or_else(|| panic!("no register {}", name))
    }

    pub fn offset(&self, name: &str) -> u64 {
        self.get(name).offset
    }

    pub fn window_at(&self, addr: u64) -> Option<&Window> {
        self.registers.iter().find(|w| w.contains(addr))
    }

    /// Every mapped word address, ascending.
    pub fn word_addresses(&self) -> Vec<u64> {
        self.registers.iter().flat_map(|w| w.words()).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut regs: Vec<&Window> = self.registers.iter().collect();
        regs.sort_by_key(|w| w.offset);
        for w in &regs {
            if w.offset % 4 != 0 || w.width == 0 || w.width % 4 != 0 {
                return Err(format!("{} is not word aligned", w.name));
            }
            if w.end() > self.size {
                return Err(format!("{} exceeds the register file", w.name));
            }
        }
        for pair in regs.windows(2) {
            if pair[0].end() > pair[1].offset {
                return Err(format!("{} overlaps {}", pair[0].name, pair[1].name));
            }
        }
        Ok(())
    }
}

const LAYOUT_JSON: &str = include_str!("../../data/registers.json");

fn layouts() -> &'static BTreeMap<Peripheral, Layout> {
    static CELL: OnceLock<BTreeMap<Peripheral, Layout>> = OnceLock::new();
    CELL.get_or_init(|| {
        let raw: BTreeMap<String, Layout> = serde_json::from_str(LAYOUT_JSON).expect("register table");
        raw.into_iter()
            .map(|(k, v)| {
                let p = Peripheral::parse(&k).expect("known peripheral");
                v.validate().expect("valid layout");
                (p, v)
            })
            .collect()
    })
}

/// Bug selection and the active mutant of one DUV instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Variant {
    pub bugs: BTreeSet<String>,
    pub mutation: Option<Mutation>,
}

impl Variant {
    pub fn clean() -> Variant {
        Variant::default()
    }

    pub fn with_bug(name: &str) -> Variant {
        let mut v = Variant::default();
        v.bugs.insert(name.to_string());
        v
    }

    pub fn has(&self, bug: &str) -> bool {
        self.bugs.contains(bug)
    }

    /// Mutation table for the given DUV; a mutation belonging to another
    /// peripheral or level leaves the table empty.
    pub fn table(&self, p: Peripheral, level: Level) -> MutationTable {
        let mut t = MutationTable::new(p, level);
        if let Some(m) = &self.mutation {
            if m.peripheral == p && m.level == level {
                t.set_mutation(&m.site, m.replacement).expect("mutation validated at construction");
            }
        }
        t
    }
}

/// Testbench-facing side of a DUV instance living in a kernel.
pub trait Model {
    fn peripheral(&self) -> Peripheral;
    fn level(&self) -> Level;

    /// Writes a whole register word directly, without bus or signal forking.
    fn inject(&self, k: &mut Kernel, name: &str, value: &Term) -> Result<(), Stop>;

    /// Writes one byte directly.
    fn inject_byte(&self, k: &mut Kernel, addr: u64, value: &Term) -> Result<(), Stop>;

    /// Current value of the word at `addr`, without side effects.
    fn peek_word(&self, k: &Kernel, e: &mut Exec, addr: u64) -> Result<Term, Stop>;

    fn peek(&self, k: &Kernel, e: &mut Exec, name: &str) -> Result<Term, Stop> {
        self.peek_word(k, e, self.peripheral().layout().offset(name))
    }

    /// Sets the CTRL start bit directly and lets the model notice it.
    fn kick(&self, k: &mut Kernel, e: &mut Exec) -> Result<(), Stop>;

    /// Byte at `addr`; TLM models return the stored cell itself.
    fn peek_byte(&self, k: &Kernel, e: &mut Exec, addr: u64) -> Result<Term, Stop> {
        let w = self.peek_word(k, e, addr & !3)?;
        let sh = 8 * (addr & 3) as u32;
        Ok(w.extract(sh + 7, sh)?)
    }

    /// TLM transaction; RTL models have none.
    fn transport(&self, _k: &mut Kernel, _e: &mut Exec, _txn: &mut TlmTransaction) -> Result<(), Stop> {
        Err(Stop::Fault(format!("{} {} has no transaction interface", self.peripheral(), self.level())))
    }

    /// Signal bus of RTL models.
    fn rtl_bus(&self) -> Option<RtlBus> {
        None
    }

    /// Signal behind a register of RTL models.
    fn reg_signal(&self, _name: &str) -> Option<SignalId> {
        None
    }

    /// Interrupt request from source `i` (interrupt controllers only).
    fn raise(&self, _k: &mut Kernel, _e: &mut Exec, _i: u32) -> Result<(), Stop> {
        Err(Stop::Fault(format!("{} has no interrupt sources", self.peripheral())))
    }

    /// Width-1 interrupt line (interrupt controllers only).
    fn irq(&self, _k: &Kernel, _e: &mut Exec) -> Result<Term, Stop> {
        Err(Stop::Fault(format!("{} has no interrupt line", self.peripheral())))
    }

    /// Width-1 term that is true once a kicked computation has finished.
    fn finished(&self, k: &Kernel, e: &mut Exec) -> Result<Term, Stop> {
        let status = self.peek(k, e, "STATUS")?;
        Ok(status.eq(&Term::lit(32, 1))?)
    }
}

/// Replaces byte `lane` of a 32-bit word.
pub fn splice_byte(word: &Term, lane: u32, byte: &Term) -> Result<Term, Stop> {
    let mut parts = Vec::new();
    for i in (0..4).rev() {
        parts.push(if i == lane {
            byte.clone()
        } else {
            word.extract(8 * i + 7, 8 * i)?
        });
    }
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = acc.concat(p)?;
    }
    Ok(acc)
}
