//! Symbolic execution of register-transfer and transaction-level peripheral
//! models running on a small event-driven simulation kernel.

pub mod engine;
pub mod harness;
pub mod kernel;
pub mod peripherals;
pub mod solver;
pub mod symarray;
pub mod term;
