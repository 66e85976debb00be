use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctrie::bench::{self, Axis, BenchConfig, BenchError, Scenario, Structure};
use ctrie::harness::{check_linearizable, record_history, sequential_fuzz_on, Verdict};
use ctrie::{validate, Ctrie, IdentityHash, Mix64};
use serde_json::json;

#[derive(Parser)]
#[command(version, about = "Validate, fuzz, check and benchmark the ctrie")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a trie from a seeded workload and check its invariants.
    Validate(Workload),
    /// Build a trie from a seeded workload and print its state counts.
    Metrics(Workload),
    /// Differential fuzzing against the reference map.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        ops: usize,
        #[arg(long, default_value_t = 1 << 14)]
        keys: u64,
    },
    /// Record concurrent histories and check them for linearizability.
    Lincheck {
        #[arg(long, default_value_t = 4)]
        threads: usize,
        #[arg(long, default_value_t = 8)]
        ops_per_thread: usize,
        #[arg(long, default_value_t = 4)]
        keys: u64,
        #[arg(long, default_value_t = 100)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append every history as JSON Lines to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run one benchmark configuration.
    Bench {
        #[command(flatten)]
        base: BenchArgs,
        #[arg(long, default_value = "ctrie")]
        structure: Structure,
    },
    /// Run every structure along one axis.
    Sweep {
        #[command(flatten)]
        base: BenchArgs,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values for the axis.
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<usize>,
        /// Comma-separated structures; all by default.
        #[arg(long, value_delimiter = ',')]
        structures: Vec<Structure>,
    },
}

#[derive(Args)]
struct Workload {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    #[arg(long, default_value_t = 1 << 10)]
    keys: u64,
    /// Use the identity hash instead of the 64-bit mix.
    #[arg(long)]
    identity_hash: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "insert")]
    scenario: Scenario,
    #[arg(long, default_value_t = 200_000)]
    elements: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    ratio: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl BenchArgs {
    fn config(&self, structure: Structure) -> BenchConfig {
        BenchConfig {
            scenario: self.scenario,
            structure,
            elements: self.elements,
            threads: self.threads,
            ratio: self.ratio,
            reps: self.reps,
            warmup: self.warmup,
            seed: self.seed,
        }
    }

    fn output(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.csv {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout()),
        })
    }
}

fn summarize<S: std::hash::BuildHasher>(trie: &Ctrie<u64, u64, S>, w: &Workload, full: bool) -> ExitCode {
    let report = sequential_fuzz_on(trie, w.seed, w.ops, w.keys, &mut |_, _| {});
    let fuzz = match report {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    let summary = validate::summarize(trie);
    let mut out = serde_json::to_value(summary).expect("summary serializes");
    if full {
        out["valid"] = json!(summary.violations == 0 && fuzz.passed());
        out["details"] = serde_json::to_value(validate::validate(trie).violations).expect("violations serialize");
    }
    println!("{out}");
    if summary.violations == 0 && fuzz.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn workload(w: &Workload, full: bool) -> ExitCode {
    if w.identity_hash {
        summarize(&Ctrie::with_hasher(IdentityHash), w, full)
    } else {
        summarize(&Ctrie::with_hasher(Mix64), w, full)
    }
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn io_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate(w) => workload(&w, true),
        Command::Metrics(w) => workload(&w, false),
        Command::Fuzz { seed, ops, keys } => {
            let trie = Ctrie::with_hasher(Mix64);
            match sequential_fuzz_on(&trie, seed, ops, keys, &mut |_, _| {}) {
                Err(e) => config_error(e),
                Ok(r) => {
                    let out = json!({
                        "seed": r.seed,
                        "executed": r.executed,
                        "passed": r.passed(),
                        "trace_digest": format!("{:016x}", r.trace_digest),
                        "divergence": r.divergence.as_ref().map(|d| format!("{d:?}")),
                    });
                    println!("{out}");
                    if r.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
            }
        }
        Command::Lincheck {
            threads,
            ops_per_thread,
            keys,
            rounds,
            seed,
            dump,
        } => {
            let mut sink = match dump.map(File::create).transpose() {
                Ok(f) => f,
                Err(e) => return io_error(e),
            };
            let mut rejected = Vec::new();
            for round in 0..rounds {
                let s = seed.wrapping_add(round);
                let h = match record_history(threads, ops_per_thread, keys, s) {
                    Ok(h) => h,
                    Err(e) => return config_error(e),
                };
                if let Some(f) = sink.as_mut() {
                    if let Err(e) = f.write_all(h.to_jsonl().as_bytes()) {
                        return io_error(e);
                    }
                }
                match check_linearizable(&h) {
                    Err(e) => return config_error(e),
                    Ok(Verdict::Accept { .. }) => {}
                    Ok(Verdict::Reject { witness }) => rejected.push(json!({"seed": s, "witness": witness})),
                }
            }
            let out = json!({
                "rounds": rounds,
                "events_per_history": threads * ops_per_thread,
                "accepted": rounds as usize - rejected.len(),
                "rejected": rejected,
            });
            println!("{out}");
            if rejected.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Bench { base, structure } => {
            eprintln!("hardware threads: {}", bench::hardware_threads());
            let row = match bench::run_scenario(&base.config(structure)) {
                Ok(r) => r,
                Err(e @ BenchError::Config(_)) => return config_error(e),
                Err(e) => return io_error(e),
            };
            match base.output().map(|w| bench::write_csv(&[row], w)) {
                Ok(Ok(())) => ExitCode::SUCCESS,
                Ok(Err(e)) => io_error(e),
                Err(e) => io_error(e),
            }
        }
        Command::Sweep {
            base,
            axis,
            points,
            structures,
        } => {
            eprintln!("hardware threads: {}", bench::hardware_threads());
            let structures = if structures.is_empty() {
                Structure::ALL.to_vec()
            } else {
                structures
            };
            let rows = match bench::sweep(axis, &base.config(Structure::Ctrie), &points, &structures) {
                Ok(r) => r,
                Err(e) => return config_error(e),
            };
            match base.output().map(|w| bench::write_csv(&rows, w)) {
                Ok(Ok(())) => ExitCode::SUCCESS,
                Ok(Err(e)) => io_error(e),
                Err(e) => io_error(e),
            }
        }
    }
}
