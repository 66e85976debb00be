use std::collections::HashSet;

use super::{HarnessError, History, ModelMap, Outcome};

/// Largest history the checker will search.
pub const MAX_EVENTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// A valid total order, as event indices.
    Accept { order: Vec<usize> },
    /// The shortest prefix (as event indices) that cannot be extended by any
    /// minimal event whose sequential result matches the recorded one.
    Reject { witness: Vec<usize> },
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept { .. })
    }
}

/// Searches for a linearization of `h`: a total order that respects
/// real-time precedence and per-thread program order, and whose sequential
/// run on [`ModelMap`] reproduces every recorded result.
pub fn check_linearizable(h: &History) -> Result<Verdict, HarnessError> {
    let n = h.events.len();
    if n > MAX_EVENTS {
        return Err(HarnessError::TooManyEvents(n));
    }
    h.check_well_formed()?;
    // must_follow[e]: events that have to be linearized before e.
    let must_follow: Vec<u64> = h
        .events
        .iter()
        .enumerate()
        .map(|(x, e)| {
            h.events.iter().enumerate().fold(0u64, |acc, (y, f)| {
                let program_order = y < x && f.thread == e.thread;
                if y != x && (program_order || f.precedes(e)) {
                    acc | 1 << y
                } else {
                    acc
                }
            })
        })
        .collect();
    let mut search = Search {
        h,
        must_follow,
        full: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
        seen: HashSet::new(),
        prefix: Vec::new(),
        dead_end: None,
    };
    if search.dfs(0, ModelMap::new()) {
        Ok(Verdict::Accept { order: search.prefix })
    } else {
        Ok(Verdict::Reject {
            witness: search.dead_end.unwrap_or_default(),
        })
    }
}

struct Search<'a> {
    h: &'a History,
    must_follow: Vec<u64>,
    full: u64,
    seen: HashSet<(u64, ModelMap)>,
    prefix: Vec<usize>,
    dead_end: Option<Vec<usize>>,
}

impl Search<'_> {
    fn dfs(&mut self, done: u64, state: ModelMap) -> bool {
        if done == self.full {
            return true;
        }
        if !self.seen.insert((done, state.clone())) {
            return false;
        }
        let mut extended = false;
        for (x, e) in self.h.events.iter().enumerate() {
            if done & (1 << x) != 0 || self.must_follow[x] & !done != 0 {
                continue;
            }
            let mut next = state.clone();
            let got = next.apply(e.op);
            if e.result != Outcome::Unit && got != e.result {
                continue;
            }
            extended = true;
            self.prefix.push(x);
            if self.dfs(done | 1 << x, next) {
                return true;
            }
            self.prefix.pop();
        }
        if !extended && self.dead_end.as_ref().is_none_or(|w| self.prefix.len() < w.len()) {
            self.dead_end = Some(self.prefix.clone());
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{HistoryEvent, Op};

    fn ev(thread: usize, op: Op, result: Outcome, inv: u64, ret: u64) -> HistoryEvent {
        HistoryEvent {
            thread,
            op,
            result,
            invoke_ns: inv,
            return_ns: ret,
        }
    }

    fn hist(events: Vec<HistoryEvent>) -> History {
        History {
            events,
            key_space: vec![1],
        }
    }

    #[test]
    fn single_thread_program_order_accepted() {
        let h = hist(vec![
            ev(0, Op::Insert(1, 5), Outcome::Unit, 0, 1),
            ev(0, Op::Lookup(1), Outcome::Found(5), 2, 3),
            ev(0, Op::Remove(1), Outcome::Found(5), 4, 5),
            ev(0, Op::Lookup(1), Outcome::NotFound, 6, 7),
        ]);
        assert_eq!(
            check_linearizable(&h).unwrap(),
            Verdict::Accept { order: vec![0, 1, 2, 3] }
        );
    }

    #[test]
    fn concurrent_inserts_then_lookup_of_either() {
        for seen in [5, 6] {
            let h = hist(vec![
                ev(0, Op::Insert(1, 5), Outcome::Unit, 0, 10),
                ev(1, Op::Insert(1, 6), Outcome::Unit, 1, 9),
                ev(0, Op::Lookup(1), Outcome::Found(seen), 11, 12),
            ]);
            assert!(check_linearizable(&h).unwrap().is_accept());
        }
        let h = hist(vec![
            ev(0, Op::Insert(1, 5), Outcome::Unit, 0, 10),
            ev(1, Op::Insert(1, 6), Outcome::Unit, 1, 9),
            ev(0, Op::Lookup(1), Outcome::Found(7), 11, 12),
        ]);
        assert!(!check_linearizable(&h).unwrap().is_accept());
    }

    #[test]
    fn lookup_found_before_any_insert_rejected() {
        let h = hist(vec![
            ev(0, Op::Lookup(1), Outcome::Found(5), 0, 1),
            ev(1, Op::Insert(1, 5), Outcome::Unit, 2, 3),
        ]);
        assert_eq!(
            check_linearizable(&h).unwrap(),
            Verdict::Reject { witness: vec![] }
        );
    }

    #[test]
    fn witness_is_shortest_dead_end() {
        // Insert then a lookup that contradicts it in real time.
        let h = hist(vec![
            ev(0, Op::Insert(1, 5), Outcome::Unit, 0, 1),
            ev(1, Op::Lookup(1), Outcome::NotFound, 2, 3),
        ]);
        assert_eq!(
            check_linearizable(&h).unwrap(),
            Verdict::Reject { witness: vec![0] }
        );
    }

    #[test]
    fn oversized_history_rejected() {
        let events = (0..65)
            .map(|i| ev(0, Op::Lookup(1), Outcome::NotFound, 2 * i, 2 * i + 1))
            .collect();
        assert_eq!(check_linearizable(&hist(events)), Err(HarnessError::TooManyEvents(65)));
    }

    #[test]
    fn full_sixty_four_event_history() {
        let events = (0..64)
            .map(|i| ev(0, Op::Lookup(1), Outcome::NotFound, 2 * i, 2 * i + 1))
            .collect();
        assert!(check_linearizable(&hist(events)).unwrap().is_accept());
    }
}
