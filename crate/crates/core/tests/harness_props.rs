use ctrie::harness::{
    check_linearizable, record_history, sequential_fuzz, History, HistoryEvent, ModelMap, Op,
    Outcome, Verdict,
};
use proptest::prelude::*;

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..3u64, 1..100u64).prop_map(|(k, v)| Op::Insert(k, v)),
        (0..3u64).prop_map(Op::Lookup),
        (0..3u64).prop_map(Op::Remove),
    ]
}

/// A history one thread could have produced, with real results.
fn sequential_history(ops: &[Op]) -> History {
    let mut model = ModelMap::new();
    let events = ops
        .iter()
        .enumerate()
        .map(|(i, &op)| HistoryEvent {
            thread: 0,
            op,
            result: model.apply(op),
            invoke_ns: 10 * i as u64,
            return_ns: 10 * i as u64 + 5,
        })
        .collect();
    History {
        events,
        key_space: vec![0, 1, 2],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fuzz_is_deterministic(seed in any::<u64>()) {
        let a = sequential_fuzz(seed, 500, 16).unwrap();
        prop_assert!(a.passed());
        prop_assert_eq!(a, sequential_fuzz(seed, 500, 16).unwrap());
    }

    #[test]
    fn single_thread_histories_accepted_in_program_order(ops in prop::collection::vec(op_strategy(), 1..40)) {
        let h = sequential_history(&ops);
        let order: Vec<usize> = (0..ops.len()).collect();
        prop_assert_eq!(check_linearizable(&h).unwrap(), Verdict::Accept { order });
    }

    #[test]
    fn corrupted_single_thread_result_rejected(
        ops in prop::collection::vec(op_strategy(), 1..20),
        pick in any::<prop::sample::Index>(),
    ) {
        let mut h = sequential_history(&ops);
        let lookups: Vec<usize> = (0..ops.len()).filter(|&i| !matches!(ops[i], Op::Insert(..))).collect();
        prop_assume!(!lookups.is_empty());
        let x = lookups[pick.index(lookups.len())];
        h.events[x].result = match h.events[x].result {
            Outcome::Found(_) => Outcome::NotFound,
            _ => Outcome::Found(1000),
        };
        prop_assert!(!check_linearizable(&h).unwrap().is_accept());
    }
}

#[test]
fn small_contended_histories_accepted() {
    for seed in 0..50 {
        let h = record_history(3, 6, 2, seed).unwrap();
        assert_eq!(h.events.len(), 18);
        assert!(check_linearizable(&h).unwrap().is_accept(), "seed {seed}: {}", h.to_jsonl());
    }
}

#[test]
fn accepted_order_replays() {
    let h = record_history(4, 8, 4, 99).unwrap();
    let Verdict::Accept { order } = check_linearizable(&h).unwrap() else {
        panic!("rejected: {}", h.to_jsonl());
    };
    let mut model = ModelMap::new();
    for (pos, &x) in order.iter().enumerate() {
        let e = &h.events[x];
        let got = model.apply(e.op);
        assert!(e.result == Outcome::Unit || e.result == got);
        for &y in &order[pos + 1..] {
            assert!(!h.events[y].precedes(e));
        }
    }
}
