//! A lock-free concurrent hash array mapped trie.
//!
//! [`Ctrie`] supports concurrent `insert`, `lookup` and `remove` using only
//! single-word CAS, and contracts itself after removals. Alongside it live the
//! tools used to check it: a quiescent-state [`validate`] pass, randomized
//! [`harness`] runs (sequential differential fuzzing, history recording and a
//! linearizability checker) and the [`bench`] driver behind `ctriectl`.

pub mod bench;
pub mod harness;
pub mod hash;
pub mod hooks;
pub mod map;
mod node;
mod trie;
pub mod validate;

pub use hash::{flagpos, IdentityHash, Mix64};
pub use map::{ConcurrentMap, LockedHashMap, LockedOrderedMap};
pub use trie::Ctrie;
