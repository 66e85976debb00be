use std::sync::{Arc, Barrier};
use std::thread;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use super::fuzz::{apply, random_op};
use super::{HarnessError, Op, OpKind, Outcome};
use crate::hash::Mix64;
use crate::Ctrie;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryEvent {
    pub thread: usize,
    pub op: Op,
    pub result: Outcome,
    /// Nanoseconds since a process-wide origin.
    pub invoke_ns: u64,
    pub return_ns: u64,
}

impl HistoryEvent {
    /// Real-time precedence: `self` returned before `other` was invoked.
    pub fn precedes(&self, other: &HistoryEvent) -> bool {
        self.return_ns < other.invoke_ns
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    pub events: Vec<HistoryEvent>,
    pub key_space: Vec<u64>,
}

#[derive(Serialize)]
struct JsonEvent {
    t: usize,
    op: OpKind,
    k: u64,
    v: Option<u64>,
    res: Value,
    inv: u64,
    ret: u64,
}

impl History {
    /// Checks timestamps and per-thread ordering. Events of one thread must
    /// appear in program order.
    pub fn check_well_formed(&self) -> Result<(), HarnessError> {
        let mut last: Vec<Option<&HistoryEvent>> = Vec::new();
        for (x, e) in self.events.iter().enumerate() {
            if e.invoke_ns >= e.return_ns {
                return Err(HarnessError::Malformed(format!("event {x} returns before it is invoked")));
            }
            if e.op.kind() == OpKind::Insert && e.result != Outcome::Unit {
                return Err(HarnessError::Malformed(format!("insert event {x} has a result")));
            }
            if e.op.kind() != OpKind::Insert && e.result == Outcome::Unit {
                return Err(HarnessError::Malformed(format!("event {x} has no result")));
            }
            if last.len() <= e.thread {
                last.resize(e.thread + 1, None);
            }
            if let Some(prev) = last[e.thread] {
                if prev.return_ns > e.invoke_ns {
                    return Err(HarnessError::Malformed(format!(
                        "event {x} overlaps the previous event of thread {}",
                        e.thread
                    )));
                }
            }
            last[e.thread] = Some(e);
        }
        Ok(())
    }

    /// One JSON object per line: `{"t","op","k","v","res","inv","ret"}`.
    /// `res` is the found value, `"notfound"`, or `"unit"` for inserts.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let res = match e.result {
                Outcome::Found(v) => Value::from(v),
                Outcome::NotFound => Value::from("notfound"),
                Outcome::Unit => Value::from("unit"),
            };
            let line = JsonEvent {
                t: e.thread,
                op: e.op.kind(),
                k: e.op.key(),
                v: e.op.value(),
                res,
                inv: e.invoke_ns,
                ret: e.return_ns,
            };
            out.push_str(&serde_json::to_string(&line).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

/// Runs `threads` workers, each issuing `ops_per_thread` random operations on
/// one shared trie over keys `0..key_space`, and records every call.
///
/// Inserted values are unique across the whole history.
pub fn record_history(
    threads: usize,
    ops_per_thread: usize,
    key_space: u64,
    seed: u64,
) -> Result<History, HarnessError> {
    if threads < 2 {
        return Err(HarnessError::TooFewThreads { min: 2, got: threads });
    }
    if key_space == 0 {
        return Err(HarnessError::EmptyKeySpace);
    }
    let trie = Arc::new(Ctrie::with_hasher(Mix64));
    let barrier = Arc::new(Barrier::new(threads));
    let origin = Instant::now();
    let handles: Vec<_> = (0..threads)
        .map(|t| {
            let trie = Arc::clone(&trie);
            let barrier = Arc::clone(&barrier);
            thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let mut events = Vec::with_capacity(ops_per_thread);
                barrier.wait();
                for i in 0..ops_per_thread {
                    let value = ((t as u64) << 32) | (i as u64 + 1);
                    let op = random_op(&mut rng, key_space, value);
                    let invoke_ns = origin.elapsed().as_nanos() as u64;
                    let result = apply(&trie, op);
                    let return_ns = origin.elapsed().as_nanos() as u64;
                    events.push(HistoryEvent {
                        thread: t,
                        op,
                        result,
                        invoke_ns,
                        return_ns,
                    });
                }
                events
            })
        })
        .collect();
    let mut events = Vec::with_capacity(threads * ops_per_thread);
    for h in handles {
        events.extend(h.join().expect("history worker panicked"));
    }
    let history = History {
        events,
        key_space: (0..key_space).collect(),
    };
    history.check_well_formed()?;
    Ok(history)
}
