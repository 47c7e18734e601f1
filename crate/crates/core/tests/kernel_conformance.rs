use std::cell::RefCell;
use std::rc::Rc;
use std::time::Duration;

use xlsym::engine::{explore, Exec, ExploreConfig, Exploration, Stop};
use xlsym::kernel::{Kernel, KernelError, Resume, RunOutcome, Trigger};
use xlsym::solver::Solver;
use xlsym::term::Term;

pub fn run_once<F: Fn(&mut Exec) -> Result<(), Stop>>(f: F) -> Exploration {
    let x = explore("k", f, &ExploreConfig::default(), &mut Solver::builtin(Duration::from_secs(10)));
    assert!(x.report.faults.is_empty(), "{:?}", x.report.faults);
    x
}

pub type Log = Rc<RefCell<Vec<String>>>;

pub fn log() -> Log {
    Rc::new(RefCell::new(Vec::new()))
}

pub fn val(t: &Term) -> u64 {
    t.as_const().expect("concrete")
}

#[test]
pub fn reader_sees_old_value_in_same_delta() {
    run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 5));
        let seen = log();
        let l = seen.clone();
        k.method("writer", &[], false, move |ctx| ctx.write(s, &Term::lit(8, 9)))?;
        k.method("reader", &[Trigger::Changed(s)], false, move |ctx| {
            l.borrow_mut().push(format!("{}@{}", val(&ctx.read(s)), ctx.now()));
            Ok(())
        })?;
        k.enable_trace();
        assert_eq!(k.run(e, 10)?, RunOutcome::NoMoreActivity);
        assert_eq!(*seen.borrow(), vec!["5@0", "9@0"]);
        let deltas: Vec<u64> = k.activation_trace().iter().map(|a| a.delta).collect();
        assert_eq!(deltas, vec![0, 0, 1]);
        Ok(())
    });
}

#[test]
pub fn pending_is_invisible_until_update() {
    run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 5));
        let seen = log();
        let l = seen.clone();
        k.method("rw", &[], false, move |ctx| {
            ctx.write(s, &Term::lit(8, 9))?;
            l.borrow_mut().push(val(&ctx.read(s)).to_string());
            Ok(())
        })?;
        k.run(e, 0)?;
        assert_eq!(*seen.borrow(), vec!["5"]);
        assert_eq!(val(&k.read(s)), 9);
        Ok(())
    });
}

#[test]
pub fn fresh_signal_reads_initial_value() {
    let k = {
        let mut k = Kernel::new();
        k.signal("s", Term::lit(4, 3));
        k
    };
    assert_eq!(val(&k.read(xlsym::kernel::SignalId(0))), 3);
}

#[test]
pub fn last_write_wins() {
    run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 0));
        k.method("a", &[], false, move |ctx| ctx.write(s, &Term::lit(8, 1)))?;
        k.method("b", &[], false, move |ctx| ctx.write(s, &Term::lit(8, 2)))?;
        k.run(e, 0)?;
        assert_eq!(val(&k.read(s)), 2);
        Ok(())
    });
}

#[test]
pub fn writing_current_value_cancels_pending() {
    run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 0));
        let runs = log();
        let r = runs.clone();
        k.method("w", &[], false, move |ctx| {
            ctx.write(s, &Term::lit(8, 1))?;
            ctx.write(s, &Term::lit(8, 0))
        })?;
        k.method("watch", &[Trigger::Changed(s)], true, move |_| {
            r.borrow_mut().push("run".into());
            Ok(())
        })?;
        k.run(e, 0)?;
        assert_eq!(val(&k.read(s)), 0);
        assert!(runs.borrow().is_empty());
        Ok(())
    });
}

#[test]
pub fn equal_constant_write_does_not_fork() {
    let x = run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 0));
        k.write(e, s, &Term::lit(8, 0))?;
        assert!(k.pending(s).is_none());
        Ok(())
    });
    assert_eq!((x.report.paths_complete, x.report.queries), (1, 0));
}

#[test]
pub fn symbolic_write_forks_on_difference() {
    let x = run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 0));
        let a = e.symbol("a", 8)?;
        k.write(e, s, &a)?;
        Ok(())
    });
    assert_eq!(x.report.paths_complete, 2);
}

#[test]
pub fn two_symbolic_writes_give_four_paths() {
    let x = run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 0));
        let a = e.symbol("a", 8)?;
        let b = e.symbol("b", 8)?;
        k.write(e, s, &a)?;
        k.write(e, s, &b)?;
        k.run(e, 0)?;
        Ok(())
    });
    assert_eq!(x.report.paths_complete, 4);
    assert!(x.report.errors.is_empty());
}

#[test]
pub fn delta_chain_through_three_signals() {
    run_once(|e| {
        let mut k = Kernel::new();
        let a = k.signal("a", Term::lit(8, 0));
        let b = k.signal("b", Term::lit(8, 0));
        let cc = k.signal("c", Term::lit(8, 0));
        k.method("src", &[], false, move |ctx| ctx.write(a, &Term::lit(8, 1)))?;
        k.method("ab", &[Trigger::Changed(a)], true, move |ctx| {
            let v = ctx.read(a).add(&Term::lit(8, 1))?;
            ctx.write(b, &v)
        })?;
        k.method("bc", &[Trigger::Changed(b)], true, move |ctx| {
            let v = ctx.read(b).add(&Term::lit(8, 1))?;
            ctx.write(cc, &v)
        })?;
        k.enable_trace();
        k.run(e, 0)?;
        assert_eq!(val(&k.read(cc)), 3);
        let t: Vec<(String, u64)> = k.activation_trace().iter().map(|r| (r.process.clone(), r.delta)).collect();
        assert_eq!(
            t,
            vec![("src".into(), 0), ("ab".into(), 1), ("bc".into(), 2)]
        );
        assert_eq!(k.now(), 0);
        Ok(())
    });
}

#[test]
pub fn runnable_order_is_registration_order() {
    run_once(|e| {
        let mut k = Kernel::new();
        let ev = k.event("go");
        for name in ["p0", "p1", "p2"] {
            k.method(name, &[Trigger::Event(ev)], true, |_| Ok(()))?;
        }
        k.notify(ev, 0);
        k.enable_trace();
        k.run(e, 0)?;
        let names: Vec<&str> = k.activation_trace().iter().map(|r| r.process.as_str()).collect();
        assert_eq!(names, vec!["p0", "p1", "p2"]);
        Ok(())
    });
}

#[test]
pub fn late_waiter_is_notified() {
    run_once(|e| {
        let mut k = Kernel::new();
        let ev = k.event("ev");
        let woke = log();
        let w = woke.clone();
        k.thread("notifier", &[], false, move |ctx, _| {
            ctx.notify(ev, 10);
            Ok(Resume::Done)
        })?;
        k.thread("late", &[], false, move |ctx, label| match label {
            0 => ctx.wait_time(4, 1),
            1 => ctx.wait_event(ev, 2),
            _ => {
                w.borrow_mut().push(format!("woke@{}", ctx.now()));
                Ok(Resume::Done)
            }
        })?;
        k.run(e, 100)?;
        assert_eq!(*woke.borrow(), vec!["woke@10"]);
        Ok(())
    });
}

#[test]
pub fn two_waiters_one_notify() {
    run_once(|e| {
        let mut k = Kernel::new();
        let ev = k.event("ev");
        let woke = log();
        for name in ["w1", "w2"] {
            let w = woke.clone();
            k.thread(name, &[], false, move |ctx, label| match label {
                0 => ctx.wait_event(ev, 1),
                _ => {
                    w.borrow_mut().push(format!("{}@{}", ctx.pid(), ctx.now()));
                    Ok(Resume::Done)
                }
            })?;
        }
        k.thread("n", &[], false, move |ctx, label| match label {
            0 => ctx.wait_time(1, 1),
            _ => {
                ctx.notify(ev, 0);
                Ok(Resume::Done)
            }
        })?;
        k.run(e, 10)?;
        assert_eq!(*woke.borrow(), vec!["0@1", "1@1"]);
        Ok(())
    });
}

#[test]
pub fn notify_without_waiters_is_harmless() {
    run_once(|e| {
        let mut k = Kernel::new();
        let ev = k.event("ev");
        k.notify(ev, 3);
        assert_eq!(k.run(e, 10)?, RunOutcome::NoMoreActivity);
        assert_eq!(k.now(), 3);
        Ok(())
    });
}

#[test]
pub fn earlier_notify_wins() {
    run_once(|e| {
        let mut k = Kernel::new();
        let ev = k.event("ev");
        let woke = log();
        let w = woke.clone();
        k.thread("w", &[], false, move |ctx, label| match label {
            0 => ctx.wait_event(ev, 1),
            _ => {
                w.borrow_mut().push(ctx.now().to_string());
                Ok(Resume::Done)
            }
        })?;
        k.notify(ev, 8);
        k.notify(ev, 3);
        k.notify(ev, 5);
        k.run(e, 20)?;
        assert_eq!(*woke.borrow(), vec!["3"]);
        Ok(())
    });
}

#[test]
pub fn wait_time_and_wait_event_resume_points() {
    run_once(|e| {
        let mut k = Kernel::new();
        let ev = k.event("ev");
        let woke = log();
        let w = woke.clone();
        k.thread("t", &[], false, move |ctx, label| match label {
            0 => ctx.wait_time(10, 1),
            1 => {
                w.borrow_mut().push(format!("a@{}", ctx.now()));
                ctx.wait_time(5, 2)
            }
            2 => {
                w.borrow_mut().push(format!("b@{}", ctx.now()));
                ctx.wait_event(ev, 3)
            }
            _ => {
                w.borrow_mut().push(format!("c@{}", ctx.now()));
                Ok(Resume::Done)
            }
        })?;
        k.thread("n", &[], false, move |ctx, label| match label {
            0 => ctx.wait_time(15, 1),
            _ => {
                ctx.notify(ev, 3);
                Ok(Resume::Done)
            }
        })?;
        k.run(e, 100)?;
        assert_eq!(*woke.borrow(), vec!["a@10", "b@15", "c@18"]);
        Ok(())
    });
}

#[test]
pub fn wait_from_method_is_misuse() {
    let x = explore(
        "k",
        |e| {
            let mut k = Kernel::new();
            k.method("m", &[], false, |ctx| ctx.wait_time(1, 0).map(|_| ()))?;
            k.run(e, 10)?;
            Ok(())
        },
        &ExploreConfig::default(),
        &mut Solver::builtin(Duration::from_secs(1)),
    );
    assert_eq!(x.report.faults.len(), 1);
    assert!(x.report.faults[0].contains("wait called from method"));
}

#[test]
pub fn clock_waveform() {
    run_once(|e| {
        let mut k = Kernel::new();
        let clk = k.clock("clk", 2, 50)?;
        let mut seen = Vec::new();
        for t in 0..4 {
            k.run(e, t)?;
            seen.push(val(&k.read(clk)));
        }
        assert_eq!(seen, vec![1, 0, 1, 0]);
        Ok(())
    });
}

#[test]
pub fn degenerate_clocks_are_rejected() {
    let mut k = Kernel::new();
    assert_eq!(k.clock("c", 1, 50), Err(KernelError::BadClock { period: 1, duty: 50 }));
    assert!(k.clock("c", 4, 0).is_err());
    assert!(k.clock("c", 4, 100).is_err());
}

#[test]
pub fn posedge_method_runs_once_per_period() {
    run_once(|e| {
        let mut k = Kernel::new();
        let clk = k.clock("clk", 4, 25)?;
        let pid = k.method("m", &[Trigger::Posedge(clk)], true, |_| Ok(()))?;
        let any = k.method("any", &[Trigger::Changed(clk)], true, |_| Ok(()))?;
        k.run(e, 39)?;
        assert_eq!(k.activations_of(pid), 10);
        assert_eq!(k.activations_of(any), 20);
        Ok(())
    });
}

#[test]
pub fn unbound_port_fails_elaboration() {
    let x = explore(
        "k",
        |e| {
            let mut k = Kernel::new();
            let _p = k.port("p");
            k.run(e, 1)?;
            Ok(())
        },
        &ExploreConfig::default(),
        &mut Solver::builtin(Duration::from_secs(1)),
    );
    assert!(x.report.faults[0].contains("port p is not bound"));
}

#[test]
pub fn ports_delegate_to_signals() {
    run_once(|e| {
        let mut k = Kernel::new();
        let s = k.signal("s", Term::lit(8, 1));
        let p = k.port("p");
        k.bind(p, s);
        k.method("m", &[], false, move |ctx| {
            let v = ctx.read_port(p)?.add(&Term::lit(8, 1))?;
            ctx.write_port(p, &v)
        })?;
        k.run(e, 0)?;
        assert_eq!(val(&k.read(s)), 2);
        Ok(())
    });
}

#[test]
pub fn quiescent_kernel_stops_immediately() {
    run_once(|e| {
        let mut k = Kernel::new();
        assert_eq!(k.run(e, 1000)?, RunOutcome::NoMoreActivity);
        assert_eq!(k.activations(), 0);
        Ok(())
    });
}

#[test]
pub fn step_budget_turns_loops_into_partial_paths() {
    let cfg = ExploreConfig {
        step_budget: 50,
        ..ExploreConfig::default()
    };
    let x = explore(
        "loop",
        |e| {
            let mut k = Kernel::new();
            k.thread("spin", &[], false, |ctx, _| ctx.wait_time(1, 0))?;
            k.run(e, u64::MAX)?.ok()?;
            Ok(())
        },
        &cfg,
        &mut Solver::builtin(Duration::from_secs(1)),
    );
    assert_eq!(x.report.paths_partial, 1);
}

#[test]
pub fn stop_request_finishes_run() {
    run_once(|e| {
        let mut k = Kernel::new();
        k.thread("t", &[], false, |ctx, label| match label {
            0 => ctx.wait_time(7, 1),
            _ => {
                ctx.stop();
                ctx.wait_time(1, 1)
            }
        })?;
        assert_eq!(k.run(e, 1000)?, RunOutcome::Finished);
        assert_eq!(k.now(), 7);
        Ok(())
    });
}

#[test]
pub fn zero_wait_resumes_next_delta() {
    run_once(|e| {
        let mut k = Kernel::new();
        k.thread("t", &[], false, |ctx, label| match label {
            0 => ctx.wait_time(0, 1),
            _ => Ok(Resume::Done),
        })?;
        k.enable_trace();
        k.run(e, 5)?;
        let t: Vec<(u64, u64)> = k.activation_trace().iter().map(|r| (r.time, r.delta)).collect();
        assert_eq!(t, vec![(0, 0), (0, 1)]);
        Ok(())
    });
}
