//! Scenarios, the mutation campaign and report output.

pub mod campaign;
pub mod functional;
pub mod iface;
pub mod report;
pub mod tb;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{explore, Exec, ExploreConfig, Exploration, Stop};
use crate::peripherals::{Level, Peripheral, Variant};
use crate::solver::Solver;
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    StandaloneRtl,
    StandaloneTlm,
    CrossLevel,
    InterfaceRead,
    InterfaceWrite,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::StandaloneRtl => "standalone-rtl",
            ScenarioKind::StandaloneTlm => "standalone-tlm",
            ScenarioKind::CrossLevel => "cross-level",
            ScenarioKind::InterfaceRead => "interface-read",
            ScenarioKind::InterfaceWrite => "interface-write",
        })
    }
}

/// Which model's testbench phase runs first in a cross-level scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    TlmFirst,
    RtlFirst,
}

pub type Body = fn(&mut Exec, &Scenario, &Variant) -> Result<(), Stop>;

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub peripheral: Peripheral,
    /// Model level for standalone and interface scenarios.
    pub level: Option<Level>,
    /// Symbolic inputs, declared in this order.
    pub inputs: Vec<(String, u32)>,
    pub order: Order,
    /// Datapath width where the DUV has one.
    pub width: u32,
    pub description: &'static str,
    pub body: Body,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("peripheral", &self.peripheral)
            .field("level", &self.level)
            .field("inputs", &self.inputs)
            .finish()
    }
}

impl Scenario {
    /// Declares the symbolic inputs.
    pub fn declare(&self, e: &mut Exec) -> Result<BTreeMap<String, Term>, Stop> {
        let mut m = BTreeMap::new();
        for (n, w) in &self.inputs {
            m.insert(n.clone(), e.symbol(n, *w)?);
        }
        Ok(m)
    }

    pub fn input_bits(&self) -> u32 {
        self.inputs.iter().map(|i| i.1).sum()
    }

    pub fn run(&self, e: &mut Exec, variant: &Variant) -> Result<(), Stop> {
        (self.body)(e, self, variant)
    }
}

fn inputs(list: &[(&str, u32)]) -> Vec<(String, u32)> {
    list.iter().map(|(n, w)| (n.to_string(), *w)).collect()
}

fn lanes(width: u32) -> Vec<(String, u32)> {
    let mut v: Vec<_> = (0..8).map(|i| (format!("in{i}"), width)).collect();
    v.push(("m".into(), width));
    v
}

/// Every registered scenario, in listing order.
pub fn registry() -> Vec<Scenario> {
    use Level::*;
    use Peripheral::*;
    use ScenarioKind::*;
    let sc = |name: String, kind, p, level, inputs, width, description, body: Body| Scenario {
        name,
        kind,
        peripheral: p,
        level,
        inputs,
        order: Order::TlmFirst,
        width,
        description,
        body,
    };
    let mut v = vec![
        sc(
            "signal-two-writes".into(),
            StandaloneRtl,
            Gcd,
            Some(Rtl),
            inputs(&[("a", 8), ("b", 8)]),
            32,
            "two symbolic values written to register signals",
            functional::signal_two_writes,
        ),
        sc(
            "signal-direct-inject".into(),
            StandaloneRtl,
            Gcd,
            Some(Rtl),
            inputs(&[("a", 8), ("b", 8)]),
            32,
            "the same two values injected straight into the registers",
            functional::signal_direct_inject,
        ),
    ];
    for l in Level::ALL {
        let k = if l == Rtl { StandaloneRtl } else { StandaloneTlm };
        let ab = inputs(&[("a", 4), ("b", 4)]);
        v.push(sc(format!("gcd-{l}-standalone"), k, Gcd, Some(l), ab.clone(), 4, "GCD against Euclid", functional::gcd_standalone));
        v.push(sc(
            format!("gcd-{l}-bounded"),
            k,
            Gcd,
            Some(l),
            ab.clone(),
            4,
            "GCD against Euclid with a latency watchdog",
            functional::gcd_standalone_bounded,
        ));
        v.push(sc(format!("hash-{l}-standalone"), k, Hash, Some(l), ab, 4, "hash against its reference", functional::hash_standalone));
        v.push(sc(format!("map-{l}-standalone"), k, Map, Some(l), lanes(2), 2, "byte map against its reference", functional::map_standalone));
        v.push(sc(
            format!("plic-{l}-threshold"),
            k,
            Plic,
            Some(l),
            inputs(&[("p", 3), ("t", 3)]),
            3,
            "one source against the threshold",
            functional::plic_threshold,
        ));
        v.push(sc(
            format!("plic-{l}-priority"),
            k,
            Plic,
            Some(l),
            inputs(&[("p2", 3), ("p5", 3), ("p7", 3), ("t", 3)]),
            3,
            "claim order of three sources",
            functional::plic_priority,
        ));
    }
    v.push(sc(
        "gcd-cross-4bit".into(),
        CrossLevel,
        Gcd,
        None,
        inputs(&[("a", 4), ("b", 4)]),
        4,
        "RTL and TLM GCD on the same inputs",
        functional::gcd_cross,
    ));
    v.push(sc(
        "gcd-cross-bounded".into(),
        CrossLevel,
        Gcd,
        None,
        inputs(&[("a", 4), ("b", 4)]),
        4,
        "RTL and TLM GCD with a latency watchdog",
        functional::gcd_cross_bounded,
    ));
    v.push(sc(
        "hash-cross".into(),
        CrossLevel,
        Hash,
        None,
        inputs(&[("a", 4), ("b", 4)]),
        4,
        "RTL and TLM hash on the same inputs",
        functional::hash_cross,
    ));
    v.push(sc("map-cross".into(), CrossLevel, Map, None, lanes(2), 2, "RTL and TLM map on the same inputs", functional::map_cross));
    v.push(sc(
        "plic-cross".into(),
        CrossLevel,
        Plic,
        None,
        inputs(&[("p2", 4), ("p5", 4), ("t", 3)]),
        4,
        "priorities written over the bus at both levels",
        functional::plic_cross,
    ));
    for p in Peripheral::ALL {
        for l in Level::ALL {
            let (rd, wr) = match l {
                Tlm => (inputs(&[("addr", 8), ("len", 3)]), inputs(&[("addr", 8), ("len", 3), ("d0", 1), ("d1", 1), ("d2", 1), ("d3", 1)])),
                Rtl => (inputs(&[("addr", 8)]), inputs(&[("addr", 8), ("data", 4)])),
            };
            v.push(sc(format!("{p}-{l}-iface-read"), InterfaceRead, p, Some(l), rd, 8, "symbolic register read", iface::read));
            v.push(sc(format!("{p}-{l}-iface-write"), InterfaceWrite, p, Some(l), wr, 8, "symbolic register write", iface::write));
        }
    }
    v
}

pub fn find(name: &str) -> Option<Scenario> {
    registry().into_iter().find(|s| s.name == name)
}

/// Scenario a campaign of the given kind runs; `kind` is one of
/// `standalone`, `cross`, `iface-read`, `iface-write`.
pub fn campaign_scenario(p: Peripheral, level: Level, kind: &str) -> Option<Scenario> {
    let name = match kind {
        "standalone" if p == Peripheral::Plic => format!("plic-{level}-priority"),
        "standalone" if p == Peripheral::Gcd => format!("gcd-{level}-bounded"),
        "standalone" => format!("{p}-{level}-standalone"),
        "cross" if p == Peripheral::Gcd => "gcd-cross-bounded".into(),
        "cross" => format!("{p}-cross"),
        "iface-read" | "iface-write" => format!("{p}-{level}-{kind}"),
        _ => return None,
    };
    find(&name)
}

pub const CAMPAIGN_KINDS: [&str; 4] = ["standalone", "cross", "iface-read", "iface-write"];

/// Builds the kernel and DUVs on every path and explores the scenario.
pub fn run_scenario(s: &Scenario, variant: &Variant, cfg: &ExploreConfig, solver: &mut Solver) -> Exploration {
    explore(&s.name, |e| s.run(e, variant), cfg, solver)
}
