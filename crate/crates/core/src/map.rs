//! A common interface over the trie and the lock-based baselines used by the
//! benchmark driver and the progress smoke test.

use std::collections::{BTreeMap, HashMap};
use std::hash::BuildHasher;
use std::sync::{Mutex, MutexGuard};

use crate::hash::Mix64;
use crate::hooks;
use crate::validate;
use crate::Ctrie;

/// Concurrent `u64 -> u64` map.
pub trait ConcurrentMap: Send + Sync {
    fn name(&self) -> &'static str;
    fn insert(&self, key: u64, value: u64);
    fn lookup(&self, key: u64) -> Option<u64>;
    fn remove(&self, key: u64) -> Option<u64>;
    /// Number of bindings. Only meaningful while no writer is running.
    fn quiescent_len(&self) -> usize;
    /// Whether the structure holds nothing and has shrunk back to its empty
    /// shape. Only meaningful while no writer is running.
    fn quiescent_empty(&self) -> bool {
        self.quiescent_len() == 0
    }
}

impl<S> ConcurrentMap for Ctrie<u64, u64, S>
where
    S: BuildHasher + Send + Sync,
{
    fn name(&self) -> &'static str {
        "ctrie"
    }

    fn insert(&self, key: u64, value: u64) {
        Ctrie::insert(self, key, value);
    }

    fn lookup(&self, key: u64) -> Option<u64> {
        Ctrie::lookup(self, &key)
    }

    fn remove(&self, key: u64) -> Option<u64> {
        Ctrie::remove(self, &key)
    }

    fn quiescent_len(&self) -> usize {
        validate::to_set(self).len()
    }

    /// Root absent or a single null-inode.
    fn quiescent_empty(&self) -> bool {
        let m = validate::state_metrics(self);
        m.l == 0 && m.t == 0 && m.n <= 1
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// `HashMap` behind a single mutex.
///
/// Updates read the current binding and then write while holding the lock,
/// and call the pre-CAS test hook in between, so a paused writer keeps the
/// lock held.
#[derive(Debug, Default)]
pub struct LockedHashMap {
    inner: Mutex<HashMap<u64, u64, Mix64>>,
}

impl LockedHashMap {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ConcurrentMap for LockedHashMap {
    fn name(&self) -> &'static str {
        "locked-hash"
    }

    fn insert(&self, key: u64, value: u64) {
        let mut map = lock(&self.inner);
        let _old = map.get(&key).copied();
        hooks::before_cas();
        map.insert(key, value);
    }

    fn lookup(&self, key: u64) -> Option<u64> {
        lock(&self.inner).get(&key).copied()
    }

    fn remove(&self, key: u64) -> Option<u64> {
        let mut map = lock(&self.inner);
        if !map.contains_key(&key) {
            return None;
        }
        hooks::before_cas();
        map.remove(&key)
    }

    fn quiescent_len(&self) -> usize {
        lock(&self.inner).len()
    }
}

/// `BTreeMap` behind a single mutex.
#[derive(Debug, Default)]
pub struct LockedOrderedMap {
    inner: Mutex<BTreeMap<u64, u64>>,
}

impl LockedOrderedMap {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ConcurrentMap for LockedOrderedMap {
    fn name(&self) -> &'static str {
        "locked-ordered"
    }

    fn insert(&self, key: u64, value: u64) {
        let mut map = lock(&self.inner);
        let _old = map.get(&key).copied();
        hooks::before_cas();
        map.insert(key, value);
    }

    fn lookup(&self, key: u64) -> Option<u64> {
        lock(&self.inner).get(&key).copied()
    }

    fn remove(&self, key: u64) -> Option<u64> {
        let mut map = lock(&self.inner);
        if !map.contains_key(&key) {
            return None;
        }
        hooks::before_cas();
        map.remove(&key)
    }

    fn quiescent_len(&self) -> usize {
        lock(&self.inner).len()
    }
}
