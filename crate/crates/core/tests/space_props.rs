use std::collections::{BTreeSet, HashSet, VecDeque};

use nasmcts::rng::RunRng;
use nasmcts::space::{edit_distance, enumerate_space, Architecture, DagSpace, EncodedArch, EnumerateOptions, Space, State};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn random_walk(space: &Space, rng: &mut RunRng) -> Vec<State> {
    let mut state = space.root();
    let mut visited = vec![state.clone()];
    loop {
        let actions = space.actions(&state);
        let Some(action) = actions.choose(rng) else { break };
        state = space.apply(&state, action).expect("listed action is legal");
        visited.push(state.clone());
    }
    visited
}

fn spaces() -> Vec<Space> {
    vec![Space::dag(5, 3), Space::dag(7, 3), Space::cell()]
}

#[test]
fn ten_thousand_walks_round_trip_in_every_domain() {
    for space in spaces() {
        let mut rng = RunRng::new(11);
        let mut checked = 0usize;
        for _ in 0..10_000 {
            for state in random_walk(&space, &mut rng) {
                let encoded = space.encode(&state.arch);
                assert_eq!(encoded.len(), space.encoding_len());
                assert!(encoded.digits().iter().all(|&d| d <= space.max_digit()));
                let decoded = space.decode(&encoded).expect("encoding decodes");
                assert_eq!(decoded, state.arch, "round trip failed for {encoded}");
                checked += 1;
            }
        }
        assert!(checked > 10_000);
    }
}

#[test]
fn walks_end_terminal_and_often_complete() {
    for space in spaces() {
        let mut rng = RunRng::new(5);
        let mut complete = 0;
        for _ in 0..500 {
            let last = random_walk(&space, &mut rng).pop().unwrap();
            assert!(last.terminal);
            complete += usize::from(space.is_complete(&last.arch));
        }
        assert!(complete > 0);
    }
}

fn reachable_complete(space: &Space) -> BTreeSet<String> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([space.root()]);
    let mut complete = BTreeSet::new();
    while let Some(state) = queue.pop_front() {
        if !seen.insert(state.clone()) {
            continue;
        }
        if state.terminal {
            if space.is_complete(&state.arch) {
                complete.insert(space.encode(&state.arch).to_string());
            }
            continue;
        }
        for action in space.actions(&state) {
            queue.push_back(space.apply(&state, &action).unwrap());
        }
    }
    complete
}

#[test]
fn every_enumerated_architecture_is_reachable_and_nothing_else() {
    for (nodes, ops) in [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)] {
        let dag = DagSpace::new(nodes, ops);
        let space = Space::Dag(dag.clone());
        let enumerated: BTreeSet<String> = enumerate_space(&dag, &EnumerateOptions::default())
            .unwrap()
            .map(|a| space.encode(&Architecture::Dag(a)).to_string())
            .collect();
        assert_eq!(reachable_complete(&space), enumerated, "max_nodes {nodes}, ops {ops}");
    }
}

fn walk_encodings(space: &Space, seed: u64) -> Vec<EncodedArch> {
    let mut rng = RunRng::new(seed);
    random_walk(space, &mut rng).iter().map(|s| space.encode(&s.arch)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legal_actions_never_break_bounds(seed in any::<u64>(), domain in 0usize..3) {
        let space = &spaces()[domain];
        let mut rng = RunRng::new(seed);
        for state in random_walk(space, &mut rng) {
            for v in space.validate(&state.arch) {
                prop_assert!(v.is_completeness(), "bound violated: {v}");
            }
        }
    }

    #[test]
    fn actions_are_deterministic_and_legal(seed in any::<u64>(), domain in 0usize..3) {
        let space = &spaces()[domain];
        let mut rng = RunRng::new(seed);
        for state in random_walk(space, &mut rng) {
            let first = space.actions(&state);
            prop_assert_eq!(&first, &space.actions(&state.clone()));
            let unique: HashSet<_> = first.iter().collect();
            prop_assert_eq!(unique.len(), first.len());
            for action in &first {
                prop_assert!(space.is_legal(&state, action));
            }
            if state.terminal {
                prop_assert!(first.is_empty());
            }
        }
    }

    #[test]
    fn edit_distance_is_a_metric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), domain in 0usize..3) {
        let space = &spaces()[domain];
        let pick = |seed: u64| walk_encodings(space, seed).pop().unwrap();
        let (x, y, z) = (pick(a), pick(b), pick(c));
        let d = |p: &EncodedArch, q: &EncodedArch| edit_distance(p, q).unwrap();
        prop_assert_eq!(d(&x, &x), 0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert_eq!(d(&x, &y) == 0, x == y);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
    }
}

#[test]
fn edit_distance_rejects_mixed_lengths() {
    let dag = walk_encodings(&Space::dag(5, 3), 1).pop().unwrap();
    let cell = walk_encodings(&Space::cell(), 1).pop().unwrap();
    assert!(edit_distance(&dag, &cell).is_err());
}
