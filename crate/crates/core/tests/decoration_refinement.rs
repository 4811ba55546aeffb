//! Decorated runs erase to the base runs.

use operadix::decoration::{default_alphabet, refinement_run};
use operadix::Config;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn erasure_and_gluing(seed in any::<u64>(), args in 1usize..=6, oprd in 2usize..=8) {
        let config = Config::with_bounds(args, oprd).unwrap();
        let r = refinement_run(seed, config, &default_alphabet(), 80);
        prop_assert_eq!(r.events, 80);
        prop_assert!(r.ok(), "{:?}", r);
    }
}
