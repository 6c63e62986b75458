//! Inputs shared by the benchmarks.

use aiusage_core::{builtin_v1, Card};
use aiusage_testkit::arb_complete_card;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub use aiusage_testkit::{golden_card, golden_script};

/// `count` complete cards drawn from a fixed seed.
pub fn sample_cards(count: usize) -> Vec<Card> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    let strategy = arb_complete_card(builtin_v1());
    (0..count)
        .map(|_| {
            strategy
                .new_tree(&mut runner)
                .expect("strategy yields")
                .current()
        })
        .collect()
}
