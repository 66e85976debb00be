use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hooks;
use crate::map::ConcurrentMap;

const KEY_SPACE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgressReport {
    pub passed: bool,
    /// Operations the active threads finished before the deadline.
    pub completed: u64,
    pub elapsed: Duration,
}

/// Suspends `paused` threads right before their first CAS (for the locked
/// baselines: while holding the lock), then checks whether `active` threads
/// jointly finish `budget` operations within `timeout`.
///
/// Paused threads are released and every thread is joined before returning,
/// so a failing run still terminates.
pub fn progress_smoke(
    paused: usize,
    active: usize,
    budget: u64,
    timeout: Duration,
    map: Arc<dyn ConcurrentMap>,
) -> ProgressReport {
    let release = Arc::new(AtomicBool::new(false));
    let parked = Arc::new(AtomicUsize::new(0));
    let completed = Arc::new(AtomicU64::new(0));

    let paused_handles: Vec<_> = (0..paused)
        .map(|p| {
            let map = Arc::clone(&map);
            let release = Arc::clone(&release);
            let parked = Arc::clone(&parked);
            thread::spawn(move || {
                let mut fired = false;
                let hook_parked = Arc::clone(&parked);
                hooks::set_pause_hook(Some(Box::new(move || {
                    if fired {
                        return;
                    }
                    fired = true;
                    hook_parked.fetch_add(1, Ordering::SeqCst);
                    while !release.load(Ordering::SeqCst) {
                        thread::park_timeout(Duration::from_millis(1));
                    }
                })));
                map.insert(KEY_SPACE + p as u64, 0);
                hooks::set_pause_hook(None);
            })
        })
        .collect();

    let wait_start = Instant::now();
    while parked.load(Ordering::SeqCst) < paused && wait_start.elapsed() < timeout {
        thread::sleep(Duration::from_millis(1));
    }

    let start = Instant::now();
    let active = active.max(1);
    let active_handles: Vec<_> = (0..active)
        .map(|a| {
            let map = Arc::clone(&map);
            let completed = Arc::clone(&completed);
            let share = budget / active as u64 + u64::from((a as u64) < budget % active as u64);
            thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(a as u64);
                for i in 0..share {
                    let key = rng.gen_range(0..KEY_SPACE);
                    match rng.gen_range(0..3) {
                        0 => map.insert(key, i),
                        1 => drop(map.lookup(key)),
                        _ => drop(map.remove(key)),
                    }
                    completed.fetch_add(1, Ordering::SeqCst);
                }
            })
        })
        .collect();

    while completed.load(Ordering::SeqCst) < budget && start.elapsed() < timeout {
        thread::sleep(Duration::from_millis(1));
    }
    let elapsed = start.elapsed();
    let done = completed.load(Ordering::SeqCst);
    let all_parked = parked.load(Ordering::SeqCst) == paused;

    for h in paused_handles.iter() {
        h.thread().unpark();
    }
    release.store(true, Ordering::SeqCst);
    for h in paused_handles.into_iter().chain(active_handles) {
        h.join().expect("progress worker panicked");
    }

    ProgressReport {
        passed: all_parked && done >= budget,
        completed: done,
        elapsed,
    }
}
