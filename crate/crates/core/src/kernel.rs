//! Event-driven simulation kernel with evaluate-update-delta cycles.
//!
//! Signal values are [`Term`]s, so a write whose differ check is symbolic
//! forks the current path through [`Exec::branch`]. Processes are methods,
//! which run to completion on every activation, or threads, which are
//! resumable functions: a thread body receives the label it should resume at
//! and returns the reason it suspends together with the next label.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::engine::{Exec, PartialReason, Stop};
use crate::term::Term;

pub type SimTime = u64;
pub type Pid = usize;
pub type Label = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignalId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("wait called from method process {0}")]
    WaitInMethod(String),
    #[error("port {0} is not bound")]
    UnboundPort(String),
    #[error("clock needs period >= 2 and 0 < duty < 100 (got {period}, {duty})")]
    BadClock { period: SimTime, duty: u32 },
    #[error("signal {signal} has width {expected}, written with width {got}")]
    Width { signal: String, expected: u32, got: u32 },
    #[error("{0} has no rising-edge event")]
    NoPosedge(String),
}

impl From<KernelError> for Stop {
    fn from(e: KernelError) -> Stop {
        Stop::Fault(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Finished,
    NoMoreActivity,
    StepBudgetExhausted,
}

impl RunOutcome {
    /// Maps budget exhaustion to a partial path.
    pub fn ok(self) -> Result<RunOutcome, Stop> {
        match self {
            RunOutcome::StepBudgetExhausted => Err(Stop::Partial(PartialReason::StepBudget)),
            o => Ok(o),
        }
    }
}

/// What a suspended thread waits for before resuming at the given label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resume {
    WaitTime(SimTime, Label),
    WaitEvent(EventId, Label),
    WaitStatic(Label),
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Changed(SignalId),
    Posedge(SignalId),
    Event(EventId),
}

type MethodBody = Box<dyn for<'k, 'x> FnMut(&mut Ctx<'k, 'x>) -> Result<(), Stop>>;
type ThreadBody = Box<dyn for<'k, 'x> FnMut(&mut Ctx<'k, 'x>, Label) -> Result<Resume, Stop>>;

enum Body {
    Method(MethodBody),
    Thread(ThreadBody),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ThreadState {
    Ready,
    Waiting,
    WaitingStatic,
    Done,
}

struct Process {
    name: String,
    is_method: bool,
    body: Option<Body>,
    label: Label,
    state: ThreadState,
    dont_initialize: bool,
    activations: u64,
}

struct SignalState {
    name: String,
    width: u32,
    current: Term,
    pending: Option<Term>,
    changed: EventId,
    posedge: Option<EventId>,
}

#[derive(Default)]
struct EventState {
    name: String,
    waiters: BTreeSet<Pid>,
    statics: BTreeSet<Pid>,
    delta_pending: bool,
    timed_pending: Option<SimTime>,
    generation: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Timed {
    Wake(Pid),
    ClockEdge(usize),
    Fire(EventId, u64),
}

struct Clock {
    signal: SignalId,
    high: SimTime,
    low: SimTime,
}

/// One activation record for tracing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationRecord {
    pub time: SimTime,
    pub delta: u64,
    pub process: String,
}

/// Mutable kernel state visible to running processes.
pub struct KernelState {
    now: SimTime,
    delta: u64,
    signals: Vec<SignalState>,
    events: Vec<EventState>,
    ports: Vec<(String, Option<SignalId>)>,
    updates: BTreeSet<SignalId>,
    runnable: BTreeSet<Pid>,
    timed: BTreeMap<(SimTime, u8, u64), Timed>,
    seq: u64,
    stop: bool,
}

impl KernelState {
    fn schedule(&mut self, at: SimTime, item: Timed) {
        let class = match item {
            Timed::Wake(_) => 0,
            Timed::ClockEdge(_) => 1,
            Timed::Fire(..) => 2,
        };
        self.seq += 1;
        self.timed.insert((at, class, self.seq), item);
    }

    fn notify(&mut self, ev: EventId, delay: SimTime) {
        let at = self.now + delay;
        let e = &mut self.events[ev.0];
        if delay == 0 {
            e.delta_pending = true;
            e.timed_pending = None;
            e.generation += 1;
            return;
        }
        if e.delta_pending || e.timed_pending.is_some_and(|t| t <= at) {
            return;
        }
        e.generation += 1;
        e.timed_pending = Some(at);
        let g = e.generation;
        self.schedule(at, Timed::Fire(ev, g));
    }

    fn fire(&mut self, ev: EventId, procs: &[Process]) {
        let e = &mut self.events[ev.0];
        e.delta_pending = false;
        e.timed_pending = None;
        for p in std::mem::take(&mut e.waiters) {
            self.runnable.insert(p);
        }
        for &p in &e.statics {
            if procs[p].is_method || procs[p].state == ThreadState::WaitingStatic {
                self.runnable.insert(p);
            }
        }
    }

    fn resolve(&self, port: PortId) -> Result<SignalId, KernelError> {
        let (name, bound) = &self.ports[port.0];
        bound.ok_or_else(|| KernelError::UnboundPort(name.clone()))
    }
}

/// Handle passed to a running process.
pub struct Ctx<'k, 'x> {
    st: &'k mut KernelState,
    exec: &'k mut Exec<'x>,
    pid: Pid,
    is_method: bool,
    name: &'k str,
}

impl<'k, 'x> Ctx<'k, 'x> {
    pub fn exec(&mut self) -> &mut Exec<'x> {
        self.exec
    }

    pub fn now(&self) -> SimTime {
        self.st.now
    }

    pub fn pid(&self) -> Pid {
        self.pid
    }

    /// Current value; a write in the same evaluate phase is not visible.
    pub fn read(&self, sig: SignalId) -> Term {
        self.st.signals[sig.0].current.clone()
    }

    pub fn write(&mut self, sig: SignalId, value: &Term) -> Result<(), Stop> {
        write_signal(self.st, self.exec, sig, value)
    }

    pub fn read_port(&self, port: PortId) -> Result<Term, Stop> {
        Ok(self.read(self.st.resolve(port)?))
    }

    pub fn write_port(&mut self, port: PortId, value: &Term) -> Result<(), Stop> {
        let sig = self.st.resolve(port)?;
        self.write(sig, value)
    }

    pub fn notify(&mut self, ev: EventId, delay: SimTime) {
        self.st.notify(ev, delay);
    }

    /// Ends the run after the current delta cycle.
    pub fn stop(&mut self) {
        self.st.stop = true;
    }

    fn wait(&self, r: Resume) -> Result<Resume, Stop> {
        if self.is_method {
            return Err(KernelError::WaitInMethod(self.name.to_string()).into());
        }
        Ok(r)
    }

    pub fn wait_time(&self, d: SimTime, next: Label) -> Result<Resume, Stop> {
        self.wait(Resume::WaitTime(d, next))
    }

    pub fn wait_event(&self, ev: EventId, next: Label) -> Result<Resume, Stop> {
        self.wait(Resume::WaitEvent(ev, next))
    }

    pub fn wait_static(&self, next: Label) -> Result<Resume, Stop> {
        self.wait(Resume::WaitStatic(next))
    }
}

/// Differ-checked write: forks when `current != value` is symbolic.
fn write_signal(st: &mut KernelState, exec: &mut Exec, sig: SignalId, value: &Term) -> Result<(), Stop> {
    let s = &st.signals[sig.0];
    if value.width() != s.width {
        return Err(KernelError::Width {
            signal: s.name.clone(),
            expected: s.width,
            got: value.width(),
        }
        .into());
    }
    let differ = exec.branch(&s.current.ne(value)?)?;
    if differ {
        st.signals[sig.0].pending = Some(value.clone());
        st.updates.insert(sig);
    } else {
        st.signals[sig.0].pending = None;
        st.updates.remove(&sig);
    }
    Ok(())
}

pub struct Kernel {
    st: KernelState,
    procs: Vec<Process>,
    clocks: Vec<Clock>,
    initialized: bool,
    activations: u64,
    trace: Option<Vec<ActivationRecord>>,
}

impl Default for Kernel {
    fn default() -> Kernel {
        Kernel::new()
    }
}

impl Kernel {
    pub fn new() -> Kernel {
        Kernel {
            st: KernelState {
                now: 0,
                delta: 0,
                signals: Vec::new(),
                events: Vec::new(),
                ports: Vec::new(),
                updates: BTreeSet::new(),
                runnable: BTreeSet::new(),
                timed: BTreeMap::new(),
                seq: 0,
                stop: false,
            },
            procs: Vec::new(),
            clocks: Vec::new(),
            initialized: false,
            activations: 0,
            trace: None,
        }
    }

    /// Records every activation from now on.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn activation_trace(&self) -> &[ActivationRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn now(&self) -> SimTime {
        self.st.now
    }

    pub fn delta_count(&self) -> u64 {
        self.st.delta
    }

    pub fn activations(&self) -> u64 {
        self.activations
    }

    pub fn activations_of(&self, pid: Pid) -> u64 {
        self.procs[pid].activations
    }

    pub fn event(&mut self, name: &str) -> EventId {
        self.st.events.push(EventState {
            name: name.to_string(),
            ..Default::default()
        });
        EventId(self.st.events.len() - 1)
    }

    pub fn event_name(&self, ev: EventId) -> &str {
        &self.st.events[ev.0].name
    }

    pub fn signal(&mut self, name: &str, init: Term) -> SignalId {
        let changed = self.event(&format!("{}.changed", name));
        let posedge = (init.width() == 1).then(|| self.event(&format!("{}.posedge", name)));
        self.st.signals.push(SignalState {
            name: name.to_string(),
            width: init.width(),
            current: init,
            pending: None,
            changed,
            posedge,
        });
        SignalId(self.st.signals.len() - 1)
    }

    pub fn signal_name(&self, sig: SignalId) -> &str {
        &self.st.signals[sig.0].name
    }

    pub fn changed_event(&self, sig: SignalId) -> EventId {
        self.st.signals[sig.0].changed
    }

    pub fn posedge_event(&self, sig: SignalId) -> Result<EventId, KernelError> {
        let s = &self.st.signals[sig.0];
        s.posedge.ok_or_else(|| KernelError::NoPosedge(s.name.clone()))
    }

    pub fn read(&self, sig: SignalId) -> Term {
        self.st.signals[sig.0].current.clone()
    }

    pub fn pending(&self, sig: SignalId) -> Option<Term> {
        self.st.signals[sig.0].pending.clone()
    }

    /// Differ-checked write from outside any process (e.g. a testbench).
    pub fn write(&mut self, exec: &mut Exec, sig: SignalId, value: &Term) -> Result<(), Stop> {
        write_signal(&mut self.st, exec, sig, value)
    }

    /// Replaces the current value without a differ check or update event.
    pub fn inject(&mut self, sig: SignalId, value: Term) -> Result<(), KernelError> {
        let s = &mut self.st.signals[sig.0];
        if value.width() != s.width {
            return Err(KernelError::Width {
                signal: s.name.clone(),
                expected: s.width,
                got: value.width(),
            });
        }
        s.current = value;
        s.pending = None;
        self.st.updates.remove(&sig);
        Ok(())
    }

    pub fn notify(&mut self, ev: EventId, delay: SimTime) {
        self.st.notify(ev, delay);
    }

    pub fn port(&mut self, name: &str) -> PortId {
        self.st.ports.push((name.to_string(), None));
        PortId(self.st.ports.len() - 1)
    }

    pub fn bind(&mut self, port: PortId, sig: SignalId) {
        self.st.ports[port.0].1 = Some(sig);
    }

    pub fn port_signal(&self, port: PortId) -> Result<SignalId, KernelError> {
        self.st.resolve(port)
    }

    /// Width-1 signal starting at 0 that rises at tick 0 and then stays high
    /// for `duty` percent of every `period`.
    pub fn clock(&mut self, name: &str, period: SimTime, duty: u32) -> Result<SignalId, KernelError> {
        if period < 2 || duty == 0 || duty >= 100 {
            return Err(KernelError::BadClock { period, duty });
        }
        let high = (period * duty as u64 / 100).clamp(1, period - 1);
        let sig = self.signal(name, Term::lit(1, 0));
        self.clocks.push(Clock {
            signal: sig,
            high,
            low: period - high,
        });
        let idx = self.clocks.len() - 1;
        self.st.schedule(self.st.now, Timed::ClockEdge(idx));
        Ok(sig)
    }

    fn trigger_event(&self, t: Trigger) -> Result<EventId, KernelError> {
        Ok(match t {
            Trigger::Changed(s) => self.changed_event(s),
            Trigger::Posedge(s) => self.posedge_event(s)?,
            Trigger::Event(e) => e,
        })
    }

    fn add_process(&mut self, name: &str, body: Body, sens: &[Trigger], dont_initialize: bool) -> Result<Pid, KernelError> {
        let pid = self.procs.len();
        for t in sens {
            let ev = self.trigger_event(*t)?;
            self.st.events[ev.0].statics.insert(pid);
        }
        self.procs.push(Process {
            name: name.to_string(),
            is_method: matches!(body, Body::Method(_)),
            body: Some(body),
            label: 0,
            state: ThreadState::Ready,
            dont_initialize,
            activations: 0,
        });
        Ok(pid)
    }

    pub fn method<F>(&mut self, name: &str, sens: &[Trigger], dont_initialize: bool, body: F) -> Result<Pid, KernelError>
    where
        F: for<'k, 'x> FnMut(&mut Ctx<'k, 'x>) -> Result<(), Stop> + 'static,
    {
        self.add_process(name, Body::Method(Box::new(body)), sens, dont_initialize)
    }

    /// Thread starting at label 0; `sens` is used by [`Resume::WaitStatic`].
    pub fn thread<F>(&mut self, name: &str, sens: &[Trigger], dont_initialize: bool, body: F) -> Result<Pid, KernelError>
    where
        F: for<'k, 'x> FnMut(&mut Ctx<'k, 'x>, Label) -> Result<Resume, Stop> + 'static,
    {
        let pid = self.add_process(name, Body::Thread(Box::new(body)), sens, dont_initialize)?;
        if dont_initialize {
            self.procs[pid].state = ThreadState::WaitingStatic;
        }
        Ok(pid)
    }

    fn elaborate(&mut self) -> Result<(), KernelError> {
        for (name, bound) in &self.st.ports {
            if bound.is_none() {
                return Err(KernelError::UnboundPort(name.clone()));
            }
        }
        for (pid, p) in self.procs.iter().enumerate() {
            if !p.dont_initialize {
                self.st.runnable.insert(pid);
            }
        }
        self.initialized = true;
        Ok(())
    }

    fn activate(&mut self, pid: Pid, exec: &mut Exec) -> Result<(), Stop> {
        let mut body = self.procs[pid].body.take().expect("process re-entered");
        self.procs[pid].activations += 1;
        if let Some(t) = &mut self.trace {
            t.push(ActivationRecord {
                time: self.st.now,
                delta: self.st.delta,
                process: self.procs[pid].name.clone(),
            });
        }
        let name = self.procs[pid].name.clone();
        let label = self.procs[pid].label;
        let result = match &mut body {
            Body::Method(f) => {
                let mut ctx = Ctx {
                    st: &mut self.st,
                    exec,
                    pid,
                    is_method: true,
                    name: &name,
                };
                f(&mut ctx).map(|()| None)
            }
            Body::Thread(f) => {
                let mut ctx = Ctx {
                    st: &mut self.st,
                    exec,
                    pid,
                    is_method: false,
                    name: &name,
                };
                f(&mut ctx, label).map(Some)
            }
        };
        self.procs[pid].body = Some(body);
        if let Some(r) = result? {
            let p = &mut self.procs[pid];
            match r {
                Resume::WaitTime(d, next) => {
                    p.label = next;
                    p.state = ThreadState::Waiting;
                    // A zero wait resumes in the next delta.
                    self.st.schedule(self.st.now + d, Timed::Wake(pid));
                }
                Resume::WaitEvent(ev, next) => {
                    p.label = next;
                    p.state = ThreadState::Waiting;
                    self.st.events[ev.0].waiters.insert(pid);
                }
                Resume::WaitStatic(next) => {
                    p.label = next;
                    p.state = ThreadState::WaitingStatic;
                }
                Resume::Done => p.state = ThreadState::Done,
            }
        }
        Ok(())
    }

    fn clock_edge(&mut self, idx: usize, exec: &mut Exec) -> Result<(), Stop> {
        let c = &self.clocks[idx];
        let sig = c.signal;
        let rising = self.st.signals[sig.0].current.is_false();
        let next = self.st.now + if rising { c.high } else { c.low };
        self.st.schedule(next, Timed::ClockEdge(idx));
        write_signal(&mut self.st, exec, sig, &Term::bool(rising))
    }

    fn update_phase(&mut self, exec: &mut Exec) -> Result<(), Stop> {
        for sig in std::mem::take(&mut self.st.updates) {
            let s = &mut self.st.signals[sig.0];
            let Some(v) = s.pending.take() else { continue };
            s.current = v.clone();
            let (changed, posedge) = (s.changed, s.posedge);
            self.st.events[changed.0].delta_pending = true;
            if let Some(pe) = posedge {
                if exec.branch(&v.eq(&Term::lit(1, 1))?)? {
                    self.st.events[pe.0].delta_pending = true;
                }
            }
        }
        Ok(())
    }

    fn fire_delta_events(&mut self) {
        for k in 0..self.st.events.len() {
            if self.st.events[k].delta_pending {
                self.st.fire(EventId(k), &self.procs);
            }
        }
    }

    fn mark_woken(&mut self) {
        for &p in &self.st.runnable {
            if self.procs[p].state != ThreadState::Done {
                self.procs[p].state = ThreadState::Ready;
            }
        }
        let procs = &self.procs;
        self.st.runnable.retain(|&p| procs[p].state != ThreadState::Done);
    }

    /// Runs delta cycles and advances time up to `until`.
    pub fn run(&mut self, exec: &mut Exec, until: SimTime) -> Result<RunOutcome, Stop> {
        if !self.initialized {
            self.elaborate()?;
        }
        self.st.stop = false;
        let budget = exec.step_budget();
        loop {
            // Timed items due now.
            while let Some((&(at, c, s), _)) = self.st.timed.first_key_value() {
                if at > self.st.now {
                    break;
                }
                let item = self.st.timed.remove(&(at, c, s)).unwrap();
                match item {
                    Timed::Wake(p) => {
                        self.st.runnable.insert(p);
                    }
                    Timed::ClockEdge(i) => self.clock_edge(i, exec)?,
                    Timed::Fire(ev, g) => {
                        if self.st.events[ev.0].generation == g && self.st.events[ev.0].timed_pending.is_some() {
                            self.st.fire(ev, &self.procs);
                        }
                    }
                }
            }
            self.mark_woken();
            // Delta cycles.
            while !self.st.runnable.is_empty()
                || !self.st.updates.is_empty()
                || self.st.events.iter().any(|e| e.delta_pending)
            {
                let batch: Vec<Pid> = std::mem::take(&mut self.st.runnable).into_iter().collect();
                for pid in batch {
                    if self.activations >= budget {
                        return Ok(RunOutcome::StepBudgetExhausted);
                    }
                    self.activations += 1;
                    exec.tick()?;
                    self.activate(pid, exec)?;
                }
                self.update_phase(exec)?;
                self.fire_delta_events();
                self.mark_woken();
                self.st.delta += 1;
                if self.st.stop {
                    return Ok(RunOutcome::Finished);
                }
                // Zero-delay waits scheduled during this delta wake next delta.
                while let Some((&(at, c, s), &Timed::Wake(p))) = self.st.timed.first_key_value() {
                    if at > self.st.now {
                        break;
                    }
                    self.st.timed.remove(&(at, c, s));
                    self.st.runnable.insert(p);
                    self.mark_woken();
                }
            }
            if self.st.stop {
                return Ok(RunOutcome::Finished);
            }
            let Some((&(next, _, _), _)) = self.st.timed.first_key_value() else {
                return Ok(RunOutcome::NoMoreActivity);
            };
            if next > until {
                self.st.now = until;
                return Ok(RunOutcome::Finished);
            }
            self.st.now = next;
            self.st.delta = 0;
        }
    }
}
