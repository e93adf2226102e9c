mod support;

use proptest::prelude::*;
use suber_core::retrieval::{dice_similarity, retrieve};
use suber_core::{RetrievalKind, RetrievalStrategy};
use support::fixtures;
use support::retrieval::{check, set_dice, HISTORIES};

#[test]
fn all_strategies_match_exhaustive_reference() {
    check(HISTORIES).unwrap();
}

#[test]
fn recency_returns_newest_first() {
    let mut memory = fixtures::catalog(1, 6);
    for (i, step) in (1..=5u64).enumerate() {
        memory.record_interaction(0, i as u32, 5, step).unwrap();
    }
    let query = memory.item(5).unwrap().clone();
    let got = retrieve(
        &RetrievalStrategy::new(RetrievalKind::Recency, 3),
        &memory,
        None,
        0,
        &query,
    )
    .unwrap();
    let steps: Vec<u64> = got.iter().map(|r| r.step).collect();
    assert_eq!(steps, [5, 4, 3]);
}

fn genre_set() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(&fixtures::GENRES[..]), 0..6)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #[test]
    fn dice_is_symmetric_and_bounded(a in genre_set(), b in genre_set()) {
        let ab = dice_similarity(&a, &b);
        prop_assert_eq!(ab, dice_similarity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, set_dice(&a, &b));
    }
}
