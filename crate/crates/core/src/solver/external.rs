//! Drives an SMT-LIB2 solver process, one process per query.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::term::Term;

use super::smtlib::{parse_reply, serialize_constraints};
use super::{Answer, Backend, PathCondition};

pub struct ExternalBackend {
    program: String,
    args: Vec<String>,
    label: String,
}

impl ExternalBackend {
    /// `cmd` is split on whitespace, e.g. `"z3 -in -smt2"`.
    pub fn new(cmd: &str) -> ExternalBackend {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next().unwrap_or_default();
        ExternalBackend {
            program,
            args: parts.collect(),
            label: format!("external:{}", cmd.trim()),
        }
    }

    /// Runs one script; None on spawn failure, timeout or non-UTF-8 output.
    pub fn run_script(&self, script: &str, timeout: Duration) -> Option<String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| log::warn!("cannot start {}: {}", self.program, e))
            .ok()?;
        let mut stdin = child.stdin.take()?;
        let input = script.to_string();
        let writer = thread::spawn(move || {
            let _ = stdin.write_all(input.as_bytes());
        });
        let mut stdout = child.stdout.take()?;
        let reader = thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).ok().map(|_| s)
        });
        let deadline = Instant::now() + timeout;
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    let _ = writer.join();
                    let _ = reader.join();
                    return None;
                }
                Ok(None) => thread::sleep(Duration::from_millis(1)),
                Err(_) => return None,
            }
        }
        let _ = writer.join();
        reader.join().ok().flatten()
    }
}

impl Backend for ExternalBackend {
    fn name(&self) -> &str {
        &self.label
    }

    fn check(
        &mut self,
        pc: &PathCondition,
        extra: &[Term],
        want_model: bool,
        _pc_known_sat: bool,
        timeout: Duration,
    ) -> Answer {
        let mut roots: Vec<Term> = pc.constraints().to_vec();
        roots.extend_from_slice(extra);
        let (script, decls) = serialize_constraints(&roots, want_model);
        let Some(reply) = self.run_script(&script, timeout) else {
            return Answer::unknown();
        };
        match parse_reply(&reply, &decls, want_model) {
            Some((verdict, model)) => Answer { verdict, model },
            None => {
                log::warn!("unparsable solver reply: {}", reply.trim());
                Answer::unknown()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Verdict;
    use crate::term::SymbolTable;

    fn z3() -> Option<ExternalBackend> {
        let b = ExternalBackend::new("z3 -in -smt2");
        b.run_script("(check-sat)\n", Duration::from_secs(5)).map(|_| b)
    }

    #[test]
    fn z3_round_trip_when_installed() {
        let Some(mut be) = z3() else { return };
        let mut st = SymbolTable::new();
        let a = st.declare("a", 8).unwrap();
        let pc = PathCondition::from_constraints([a.eq(&Term::lit(8, 3)).unwrap()]).unwrap();
        let r = be.check(&pc, &[], true, false, Duration::from_secs(5));
        assert_eq!(r.verdict, Verdict::Sat);
        assert_eq!(r.model.unwrap().values().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn missing_binary_is_unknown() {
        let mut be = ExternalBackend::new("/nonexistent/solver");
        let r = be.check(&PathCondition::new(), &[Term::bool(false)], false, false, Duration::from_secs(1));
        assert_eq!(r.verdict, Verdict::Unknown);
    }
}
