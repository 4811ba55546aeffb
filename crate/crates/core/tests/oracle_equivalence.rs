//! Flat machine against the tree oracle on arbitrary accepted event sequences.

use operadix::tree_oracle::{compare, Forest};
use operadix::{Config, Event, FlatState, OperadId, Position};
use proptest::prelude::*;

/// Interpret raw choices against the current state so that most of them
/// land on something meaningful.
fn decode(state: &FlatState, choice: (bool, u8, u8, u8), fresh: &mut usize) -> Event {
    let (new, a, b, c) = choice;
    let roots: Vec<&OperadId> = state.roots().collect();
    if new || roots.len() < 2 {
        *fresh += 1;
        return Event::New {
            id: OperadId::new(format!("op{fresh}")).unwrap(),
            inputs: 1 + a as usize % state.config().max_args(),
            outputs: 1,
        };
    }
    let op1 = roots[a as usize % roots.len()].clone();
    let op2 = roots[b as usize % roots.len()].clone();
    let n = state.foliage_of(&op1).unwrap().len().max(1);
    Event::Compose {
        op1,
        position: Position::new(1 + c as usize % n).unwrap(),
        op2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn accepted_events_agree_with_trees(
        choices in prop::collection::vec((prop::bool::weighted(0.4), any::<u8>(), any::<u8>(), any::<u8>()), 1..40),
        args in 1usize..=6,
    ) {
        let config = Config::with_bounds(args, 8).unwrap();
        let mut state = FlatState::new(config);
        let mut forest = Forest::new();
        let mut fresh = 0;
        for choice in choices {
            let event = decode(&state, choice, &mut fresh);
            let Ok(next) = state.apply(&event) else { continue };
            forest.apply(&event).unwrap();
            state = next;
            prop_assert_eq!(compare(&state, &forest), Vec::<&str>::new(), "after {}", event);
            prop_assert!(state.check_invariants().is_empty(), "{:?}", state.check_invariants());
            prop_assert!(state.check_structure().is_empty());
        }
    }
}
