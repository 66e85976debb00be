//! Throughput scenarios over the trie and the lock-based baselines.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::hash::{fmix64, Mix64};
use crate::map::{ConcurrentMap, LockedHashMap, LockedOrderedMap};
use crate::Ctrie;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Insert,
    Remove,
    Lookup,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Ctrie,
    LockedHash,
    LockedOrdered,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::Ctrie, Structure::LockedHash, Structure::LockedOrdered];

    pub fn build(self) -> Arc<dyn ConcurrentMap> {
        match self {
            Structure::Ctrie => Arc::new(Ctrie::<u64, u64, Mix64>::with_hasher(Mix64)),
            Structure::LockedHash => Arc::new(LockedHashMap::new()),
            Structure::LockedOrdered => Arc::new(LockedOrderedMap::new()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Elements,
    Threads,
    Ratio,
}

macro_rules! names {
    ($t:ty, $($v:path => $s:literal),+ $(,)?) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),+ })
            }
        }

        impl FromStr for $t {
            type Err = BenchError;

            fn from_str(s: &str) -> Result<Self, BenchError> {
                match s {
                    $($s => Ok($v),)+
                    _ => Err(BenchError::Config(format!("unknown {} `{s}`", stringify!($t).to_lowercase()))),
                }
            }
        }
    };
}

names!(Scenario, Scenario::Insert => "insert", Scenario::Remove => "remove", Scenario::Lookup => "lookup", Scenario::Mixed => "mixed");
names!(Structure, Structure::Ctrie => "ctrie", Structure::LockedHash => "locked-hash", Structure::LockedOrdered => "locked-ordered");
names!(Axis, Axis::Elements => "elements", Axis::Threads => "threads", Axis::Ratio => "ratio");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("post-condition failed: {0}")]
    Check(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub structure: Structure,
    /// N
    pub elements: usize,
    /// P
    pub threads: usize,
    /// Lookups per insert, mixed scenario only.
    pub ratio: usize,
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scenario: Scenario::Insert,
            structure: Structure::Ctrie,
            elements: 200_000,
            threads: 1,
            ratio: 0,
            reps: 5,
            warmup: 1,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.threads < 1 {
            return Err(BenchError::Config("threads must be at least 1".into()));
        }
        if self.elements < self.threads {
            return Err(BenchError::Config(format!(
                "elements ({}) must be at least threads ({})",
                self.elements, self.threads
            )));
        }
        if self.reps < 3 {
            return Err(BenchError::Config(format!("repetitions must be at least 3, got {}", self.reps)));
        }
        Ok(())
    }

    /// Operations one repetition must execute.
    pub fn expected_ops(&self) -> u64 {
        let n = self.elements as u64;
        match self.scenario {
            Scenario::Mixed => n + self.ratio as u64 * n,
            _ => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub config: BenchConfig,
    pub times_ms: Vec<f64>,
    pub median_ms: f64,
    pub min_ms: f64,
    /// Operations counted in the last timed repetition.
    pub total_ops: u64,
    pub error: Option<String>,
}

impl BenchRow {
    fn failed(config: BenchConfig, err: &BenchError) -> Self {
        BenchRow {
            config,
            times_ms: Vec::new(),
            median_ms: f64::NAN,
            min_ms: f64::NAN,
            total_ops: 0,
            error: Some(err.to_string()),
        }
    }

    /// Operations per millisecond at the median time.
    pub fn throughput(&self) -> f64 {
        self.config.expected_ops() as f64 / self.median_ms
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// `n` distinct keys for a seed.
pub fn keys(n: usize, seed: u64) -> Vec<u64> {
    // fmix64 is a bijection, so distinct inputs give distinct keys.
    (0..n as u64).map(|i| fmix64(seed.wrapping_add(i))).collect()
}

pub fn hardware_threads() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

/// Warmup runs followed by timed repetitions of one configuration.
pub fn run_scenario(cfg: &BenchConfig) -> Result<BenchRow, BenchError> {
    cfg.validate()?;
    let keys: Arc<[u64]> = keys(cfg.elements, cfg.seed).into();
    for _ in 0..cfg.warmup {
        run_once(cfg, &keys)?;
    }
    let mut times_ms = Vec::with_capacity(cfg.reps);
    let mut total_ops = 0;
    for _ in 0..cfg.reps {
        let (ms, ops) = run_once(cfg, &keys)?;
        times_ms.push(ms);
        total_ops = ops;
    }
    Ok(BenchRow {
        config: *cfg,
        median_ms: median(&times_ms),
        min_ms: times_ms.iter().copied().fold(f64::INFINITY, f64::min),
        times_ms,
        total_ops,
        error: None,
    })
}

fn run_once(cfg: &BenchConfig, keys: &Arc<[u64]>) -> Result<(f64, u64), BenchError> {
    let map = cfg.structure.build();
    if matches!(cfg.scenario, Scenario::Remove | Scenario::Lookup) {
        for &k in keys.iter() {
            map.insert(k, k);
        }
    }
    let ops = Arc::new(AtomicU64::new(0));
    let hits = Arc::new(AtomicU64::new(0));
    let barrier = Arc::new(Barrier::new(cfg.threads + 1));
    let p = cfg.threads;
    let n = keys.len();
    let handles: Vec<_> = (0..p)
        .map(|t| {
            let (map, keys, ops, hits, barrier) = (
                Arc::clone(&map),
                Arc::clone(keys),
                Arc::clone(&ops),
                Arc::clone(&hits),
                Arc::clone(&barrier),
            );
            let (scenario, ratio, seed) = (cfg.scenario, cfg.ratio, cfg.seed);
            thread::spawn(move || {
                let slice = &keys[t * n / p..(t + 1) * n / p];
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64 + 1);
                let (mut done, mut found) = (0u64, 0u64);
                barrier.wait();
                let began = Instant::now();
                for &k in slice {
                    match scenario {
                        Scenario::Insert => map.insert(k, k),
                        Scenario::Remove => found += u64::from(map.remove(k).is_some()),
                        Scenario::Lookup => found += u64::from(map.lookup(k).is_some()),
                        Scenario::Mixed => {
                            map.insert(k, k);
                            for _ in 0..ratio {
                                let other = keys[rng.gen_range(0..n)];
                                found += u64::from(map.lookup(other).is_some());
                                done += 1;
                            }
                        }
                    }
                    done += 1;
                }
                let ended = Instant::now();
                ops.fetch_add(done, Ordering::Relaxed);
                hits.fetch_add(found, Ordering::Relaxed);
                (began, ended)
            })
        })
        .collect();
    barrier.wait();
    // Workers stamp their own release and finish, so the span is right even
    // when they run before this thread is scheduled again.
    let mut span: Option<(Instant, Instant)> = None;
    for h in handles {
        let (b, e) = h.join().map_err(|_| BenchError::Check("worker panicked".into()))?;
        span = Some(span.map_or((b, e), |(sb, se)| (sb.min(b), se.max(e))));
    }
    let (began, ended) = span.expect("at least one worker");
    let ms = (ended - began).as_secs_f64() * 1e3;

    let ops = ops.load(Ordering::Relaxed);
    if ops != cfg.expected_ops() {
        return Err(BenchError::Check(format!("executed {ops} operations, expected {}", cfg.expected_ops())));
    }
    let hits = hits.load(Ordering::Relaxed);
    match cfg.scenario {
        Scenario::Insert | Scenario::Mixed if map.quiescent_len() != n => {
            return Err(BenchError::Check(format!("{} keys after inserting {n}", map.quiescent_len())));
        }
        Scenario::Remove if hits != n as u64 || !map.quiescent_empty() => {
            return Err(BenchError::Check(format!("{hits} of {n} removals found a key, or structure not empty")));
        }
        Scenario::Lookup if hits != n as u64 => {
            return Err(BenchError::Check(format!("{hits} of {n} lookups found their key")));
        }
        _ => {}
    }
    Ok((ms, ops))
}

/// Runs every structure at every point along `axis`. Failing points become
/// rows carrying an error; the sweep keeps going.
pub fn sweep(
    axis: Axis,
    base: &BenchConfig,
    points: &[usize],
    structures: &[Structure],
) -> Result<Vec<BenchRow>, BenchError> {
    if points.is_empty() {
        return Err(BenchError::Config("sweep needs at least one point".into()));
    }
    let mut rows = Vec::new();
    for &point in points {
        for &structure in structures {
            let mut cfg = BenchConfig { structure, ..*base };
            match axis {
                Axis::Elements => cfg.elements = point,
                Axis::Threads => cfg.threads = point,
                Axis::Ratio => cfg.ratio = point,
            }
            rows.push(run_scenario(&cfg).unwrap_or_else(|e| BenchRow::failed(cfg, &e)));
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CsvRecord {
    scenario: String,
    structure: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "P")]
    p: usize,
    r: usize,
    rep: usize,
    median_ms: String,
    min_ms: String,
    error: String,
}

/// Writes `scenario,structure,N,P,r,rep,median_ms,min_ms,error`; `rep` is
/// the number of timed repetitions.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        let c = &row.config;
        let ms = |x: f64| if x.is_finite() { format!("{x:.3}") } else { String::new() };
        w.serialize(CsvRecord {
            scenario: c.scenario.to_string(),
            structure: c.structure.to_string(),
            n: c.elements,
            p: c.threads,
            r: c.ratio,
            rep: row.times_ms.len(),
            median_ms: ms(row.median_ms),
            min_ms: ms(row.min_ms),
            error: row.error.clone().unwrap_or_default(),
        })?;
    }
    if rows.is_empty() {
        w.write_record(["scenario", "structure", "N", "P", "r", "rep", "median_ms", "min_ms", "error"])?;
    }
    w.flush()?;
    Ok(())
}
