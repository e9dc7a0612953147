use arsid_annotation::Store;
use arsid_core::{Corpus, Tweet};
use proptest::prelude::*;

fn corpus(n: usize) -> Corpus {
    Corpus::new((0..n).map(|i| Tweet::new(format!("t{i}"), "نص")).collect(), "mem").unwrap()
}

#[derive(Debug, Clone)]
enum Op {
    Create(u64),
    Label { session: usize, item: usize, label: i64 },
    Revise { session: usize, item: usize, label: i64 },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        1 => any::<u64>().prop_map(Op::Create),
        5 => (0..3usize, 0..6usize, 0..2i64).prop_map(|(session, item, label)| Op::Label { session, item, label }),
        2 => (0..3usize, 0..6usize, 0..2i64).prop_map(|(session, item, label)| Op::Revise { session, item, label }),
    ]
}

fn apply(store: &Store, op: &Op) {
    let sessions = store.sessions();
    match op {
        Op::Create(seed) => {
            store.create_session("ann", *seed).unwrap();
        }
        Op::Label { session, item, label } | Op::Revise { session, item, label } => {
            let Some(s) = sessions.get(*session) else { return };
            let tweet = &s.queue[*item % s.queue.len()];
            let _ = if matches!(op, Op::Label { .. }) {
                store.submit_label(&s.session_id, tweet, *label)
            } else {
                store.revise_label(&s.session_id, tweet, *label)
            };
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Reopening a directory yields exactly the state that was acknowledged,
    /// whatever the snapshot interval.
    #[test]
    fn reopen_restores_acknowledged_state(ops in prop::collection::vec(op(), 1..40), every in 1u64..6) {
        let dir = tempfile::tempdir().unwrap();
        let c = corpus(6);
        let before = {
            let store = Store::open(&c, dir.path(), every).unwrap();
            for o in &ops {
                apply(&store, o);
            }
            store.sessions()
        };
        let after = Store::open(&c, dir.path(), every).unwrap().sessions();
        prop_assert_eq!(&before, &after);
        // and once more, now starting from whatever snapshot exists
        let again = Store::open(&c, dir.path(), every).unwrap().sessions();
        prop_assert_eq!(before, again);
    }
}
