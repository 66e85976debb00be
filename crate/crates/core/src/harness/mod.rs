//! Randomized checking: sequential differential fuzzing against [`ModelMap`],
//! concurrent history recording, a linearizability checker for small
//! histories and a progress smoke test.

mod fuzz;
mod history;
mod lincheck;
mod model;
#[cfg(feature = "test-hooks")]
mod progress;

pub use fuzz::{sequential_fuzz, sequential_fuzz_on, Divergence, FuzzReport};
pub use history::{record_history, History, HistoryEvent};
pub use lincheck::{check_linearizable, Verdict, MAX_EVENTS};
pub use model::{ModelMap, Op, OpKind, Outcome};
#[cfg(feature = "test-hooks")]
pub use progress::{progress_smoke, ProgressReport};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error("operation count must be at least 1")]
    NoOps,
    #[error("key space must hold at least one key")]
    EmptyKeySpace,
    #[error("need at least {min} threads, got {got}")]
    TooFewThreads { min: usize, got: usize },
    #[error("history has {0} events; the checker accepts at most {MAX_EVENTS}")]
    TooManyEvents(usize),
    #[error("malformed history: {0}")]
    Malformed(String),
}
