//! State-metric changes caused by each kind of successful CAS.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use ctrie::harness::{ModelMap, Op, Outcome};
use ctrie::hooks::{self, CasKind};
use ctrie::validate::{self, StateMetrics};
use ctrie::{Ctrie, IdentityHash};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Trie = Ctrie<u64, u64, IdentityHash>;

struct Tracker {
    trie: Arc<Trie>,
    last: Mutex<StateMetrics>,
    seen: Mutex<HashMap<CasKind, usize>>,
    failures: Mutex<Vec<String>>,
}

impl Tracker {
    fn new(trie: Arc<Trie>) -> Arc<Self> {
        let last = validate::state_metrics(&*trie);
        Arc::new(Tracker {
            trie,
            last: Mutex::new(last),
            seen: Mutex::new(HashMap::new()),
            failures: Mutex::new(Vec::new()),
        })
    }

    fn install(self: &Arc<Self>) {
        let me = Arc::clone(self);
        hooks::set_cas_observer(Some(Box::new(move |kind| me.observe(kind))));
    }

    fn observe(&self, kind: CasKind) {
        let now = validate::state_metrics(&*self.trie);
        let before = std::mem::replace(&mut *self.last.lock().unwrap(), now);
        *self.seen.lock().unwrap().entry(kind).or_default() += 1;
        let dn = now.n as i64 - before.n as i64;
        let dt = now.t as i64 - before.t as i64;
        let dd = now.d as i64 - before.d as i64;
        let ok = match kind {
            CasKind::ContractNull => dn == -1 && dd < 0,
            CasKind::ContractSingle => dt == -1 && dd == -1,
            CasKind::Clean | CasKind::TombCompress => dd < 0,
            CasKind::RootReset => dn == -1 && now.d == 0,
            _ => true,
        };
        if !ok {
            self.failures
                .lock()
                .unwrap()
                .push(format!("{kind:?}: {before:?} -> {now:?}"));
        }
    }

    fn count(&self, kind: CasKind) -> usize {
        self.seen.lock().unwrap().get(&kind).copied().unwrap_or(0)
    }

    fn failures(&self) -> Vec<String> {
        self.failures.lock().unwrap().clone()
    }
}

/// Keys sharing low chunks, plus pairs with equal folded hashcodes.
fn clustered_key(rng: &mut ChaCha8Rng) -> u64 {
    let low = (0..4).fold(0u64, |acc, level| acc | rng.gen_range(0..4u64) << (5 * level));
    let high = rng.gen_range(0..2u64);
    (low ^ high) | high << 32
}

#[test]
fn compression_steps_shrink_the_trie() {
    let trie = Arc::new(Trie::with_hasher(IdentityHash));
    let tracker = Tracker::new(Arc::clone(&trie));
    tracker.install();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = ModelMap::new();
    for i in 0..20_000u64 {
        let k = clustered_key(&mut rng);
        let op = match rng.gen_range(0..10) {
            0..4 => Op::Insert(k, i),
            4..6 => Op::Lookup(k),
            _ => Op::Remove(k),
        };
        let got = match op {
            Op::Insert(k, v) => {
                trie.insert(k, v);
                Outcome::Unit
            }
            Op::Lookup(k) => trie.lookup(&k).into(),
            Op::Remove(k) => trie.remove(&k).into(),
        };
        assert_eq!(got, model.apply(op), "op {i}: {op:?}");
    }
    hooks::set_cas_observer(None);
    assert_eq!(tracker.failures(), Vec::<String>::new());
    // Null-inodes under a parent only appear when removers interleave.
    for kind in [CasKind::ContractSingle, CasKind::TombCompress] {
        assert!(tracker.count(kind) > 0, "{kind:?} never happened");
    }
    assert!(validate::validate(&*trie).is_valid());
}

/// Runs `remove(key)` on another thread that stalls right before its
/// `nth` CAS. Returns once the thread is stalled.
fn stalled_remove(
    trie: &Arc<Trie>,
    tracker: &Arc<Tracker>,
    key: u64,
    nth: usize,
) -> (thread::JoinHandle<Option<u64>>, Arc<AtomicBool>) {
    let parked = Arc::new(AtomicBool::new(false));
    let release = Arc::new(AtomicBool::new(false));
    let handle = {
        let (trie, tracker) = (Arc::clone(trie), Arc::clone(tracker));
        let (parked, release) = (Arc::clone(&parked), Arc::clone(&release));
        thread::spawn(move || {
            tracker.install();
            let mut calls = 0;
            hooks::set_pause_hook(Some(Box::new(move || {
                calls += 1;
                if calls == nth {
                    parked.store(true, Ordering::SeqCst);
                    while !release.load(Ordering::SeqCst) {
                        thread::sleep(Duration::from_millis(1));
                    }
                }
            })));
            let v = trie.remove(&key);
            hooks::set_pause_hook(None);
            hooks::set_cas_observer(None);
            v
        })
    };
    while !parked.load(Ordering::SeqCst) {
        thread::sleep(Duration::from_millis(1));
    }
    (handle, release)
}

#[test]
fn clean_resurrects_a_tomb_left_by_a_stalled_remover() {
    let trie = Arc::new(Trie::with_hasher(IdentityHash));
    trie.insert(1, 10);
    trie.insert(33, 330);
    let tracker = Tracker::new(Arc::clone(&trie));
    // Remove, entomb, then stall before contracting the parent.
    let (remover, release) = stalled_remove(&trie, &tracker, 33, 3);
    let stalled = validate::state_metrics(&*trie);
    assert_eq!((stalled.t, stalled.l), (1, 1));

    tracker.install();
    assert_eq!(trie.lookup(&1), Some(10));
    hooks::set_cas_observer(None);
    assert_eq!(tracker.count(CasKind::Clean), 1);
    let cleaned = validate::state_metrics(&*trie);
    assert_eq!(cleaned, StateMetrics { n: 0, t: 0, l: 1, r: 0, d: 3 });

    release.store(true, Ordering::SeqCst);
    assert_eq!(remover.join().unwrap(), Some(330));
    // The stalled contraction found its inode gone and did nothing.
    assert_eq!(tracker.count(CasKind::ContractSingle), 0);
    assert_eq!(tracker.failures(), Vec::<String>::new());
    assert!(validate::validate(&*trie).is_valid());
    assert_eq!(trie.lookup(&33), None);
}

#[test]
fn contract_null_drops_an_emptied_inode() {
    let trie = Arc::new(Trie::with_hasher(IdentityHash));
    trie.insert(1, 10);
    trie.insert(33, 330);
    let tracker = Tracker::new(Arc::clone(&trie));
    // Remove 1, then stall before entombing the 1-way cnode left behind.
    let (remover, release) = stalled_remove(&trie, &tracker, 1, 2);

    tracker.install();
    assert_eq!(trie.remove(&33), Some(330));
    hooks::set_cas_observer(None);
    assert_eq!(tracker.count(CasKind::ContractNull), 1);

    release.store(true, Ordering::SeqCst);
    assert_eq!(remover.join().unwrap(), Some(10));
    assert_eq!(tracker.failures(), Vec::<String>::new());
    // The root is left as a 0-way cnode.
    assert_eq!(validate::state_metrics(&*trie), StateMetrics { n: 0, t: 0, l: 1, r: 1, d: 0 });
    assert_eq!(validate::tip_count(&*trie), 1);
    assert!(validate::validate(&*trie).is_valid());
    assert_eq!(trie.lookup(&1), None);
    trie.insert(2, 20);
    assert_eq!(trie.lookup(&2), Some(20));
}
