use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HarnessError, ModelMap, Op, Outcome};
use crate::hash::Mix64;
use crate::{validate, Ctrie};

/// Draws one operation: 45% insert, 35% lookup, 20% remove.
pub(crate) fn random_op(rng: &mut impl Rng, key_space: u64, value: u64) -> Op {
    let key = rng.gen_range(0..key_space);
    match rng.gen_range(0..100) {
        0..45 => Op::Insert(key, value),
        45..80 => Op::Lookup(key),
        _ => Op::Remove(key),
    }
}

pub(crate) fn apply<S: std::hash::BuildHasher>(trie: &Ctrie<u64, u64, S>, op: Op) -> Outcome {
    match op {
        Op::Insert(k, v) => {
            trie.insert(k, v);
            Outcome::Unit
        }
        Op::Lookup(k) => trie.lookup(&k).into(),
        Op::Remove(k) => trie.remove(&k).into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    Op {
        index: usize,
        op: Op,
        expected: Outcome,
        actual: Outcome,
    },
    FinalSet {
        missing: usize,
        extra: usize,
        wrong_value: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzReport {
    pub seed: u64,
    /// Operations run, including a diverging one.
    pub executed: usize,
    /// Digest of the (op, outcome) sequence.
    pub trace_digest: u64,
    pub divergence: Option<Divergence>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Runs `n_ops` random operations on a fresh trie and on [`ModelMap`] and
/// compares every result and the final contents.
pub fn sequential_fuzz(seed: u64, n_ops: usize, key_space: u64) -> Result<FuzzReport, HarnessError> {
    let trie = Ctrie::with_hasher(Mix64);
    sequential_fuzz_on(&trie, seed, n_ops, key_space, &mut |_, _| {})
}

/// Called after each fuzz operation with its index.
pub type Observe<'a, S> = dyn FnMut(usize, &Ctrie<u64, u64, S>) + 'a;

/// Like [`sequential_fuzz`] on a caller-supplied trie. `observe` runs after
/// every operation with its index.
pub fn sequential_fuzz_on<S: std::hash::BuildHasher>(
    trie: &Ctrie<u64, u64, S>,
    seed: u64,
    n_ops: usize,
    key_space: u64,
    observe: &mut Observe<'_, S>,
) -> Result<FuzzReport, HarnessError> {
    if n_ops == 0 {
        return Err(HarnessError::NoOps);
    }
    if key_space == 0 {
        return Err(HarnessError::EmptyKeySpace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ModelMap::new();
    let mut digest = DefaultHasher::new();
    for index in 0..n_ops {
        let value = rng.gen();
        let op = random_op(&mut rng, key_space, value);
        let expected = model.apply(op);
        let actual = apply(trie, op);
        (op, actual).hash(&mut digest);
        observe(index, trie);
        if expected != actual {
            return Ok(FuzzReport {
                seed,
                executed: index + 1,
                trace_digest: digest.finish(),
                divergence: Some(Divergence::Op {
                    index,
                    op,
                    expected,
                    actual,
                }),
            });
        }
    }
    let divergence = compare_sets(model.entries(), &validate::to_set(trie));
    Ok(FuzzReport {
        seed,
        executed: n_ops,
        trace_digest: digest.finish(),
        divergence,
    })
}

fn compare_sets(
    model: &std::collections::BTreeMap<u64, u64>,
    actual: &HashMap<u64, u64>,
) -> Option<Divergence> {
    let missing = model.keys().filter(|k| !actual.contains_key(k)).count();
    let extra = actual.keys().filter(|k| !model.contains_key(k)).count();
    let wrong_value = model
        .iter()
        .filter(|(k, v)| actual.get(k).is_some_and(|a| a != *v))
        .count();
    (missing + extra + wrong_value > 0).then_some(Divergence::FinalSet {
        missing,
        extra,
        wrong_value,
    })
}
