mod support;

use support::fixtures;

use proptest::prelude::*;
use suber_core::agents::masked_softmax;
use suber_core::eval::{tv_similarity, RatingDistribution};
use suber_core::rater::rate_synthetic;
use suber_core::{RatingScale, RetrievedItem};

proptest! {
    #[test]
    fn softmax_is_shift_invariant(
        logits in prop::collection::vec(-20.0f64..20.0, 1..12),
        shift in -50.0f64..50.0,
        seed in any::<u64>(),
    ) {
        let mask: Vec<bool> = (0..logits.len()).map(|i| i > 0 && (seed >> i) & 1 == 1).collect();
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        let a = masked_softmax(&logits, &mask).unwrap();
        let b = masked_softmax(&shifted, &mask).unwrap();
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for ((x, y), m) in a.iter().zip(&b).zip(&mask) {
            prop_assert!((x - y).abs() < 1e-12);
            if *m {
                prop_assert_eq!(*x, 0.0);
            }
        }
    }

    #[test]
    fn tv_is_symmetric_and_bounded(
        a in prop::collection::vec(1u8..=10, 1..40),
        b in prop::collection::vec(1u8..=10, 1..40),
    ) {
        let p = RatingDistribution::from_ratings(a, RatingScale::MOVIE).unwrap();
        let q = RatingDistribution::from_ratings(b, RatingScale::MOVIE).unwrap();
        let pq = tv_similarity(&p, &q).unwrap();
        prop_assert_eq!(pq, tv_similarity(&q, &p).unwrap());
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert_eq!(tv_similarity(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn memory_grows_by_one_per_step(seed in any::<u64>(), actions in prop::collection::vec(0u32..8, 1..25)) {
        let mut env = fixtures::env(fixtures::catalog(3, 8), seed);
        env.reset().unwrap();
        let mut stepped = 0;
        for a in actions {
            let before = env.memory().history().len();
            let result = env.step(a).unwrap();
            prop_assert_eq!(env.memory().history().len(), before + 1);
            let last = env.memory().history().last().unwrap();
            prop_assert_eq!(last.stored_rating, result.info.perturbed);
            prop_assert_eq!(result.reward, f64::from(result.info.shaped));
            stepped += 1;
            if result.terminated {
                prop_assert_eq!(stepped % env.config().horizon, 0);
                env.reset().unwrap();
            }
        }
    }

    #[test]
    fn env_is_deterministic(seed in any::<u64>(), actions in prop::collection::vec(0u32..8, 1..25)) {
        let run = || {
            let mut env = fixtures::env(fixtures::catalog(4, 8), seed);
            env.reset().unwrap();
            let mut rewards = Vec::new();
            for &a in &actions {
                let r = env.step(a).unwrap();
                rewards.push(r.reward);
                if r.terminated {
                    env.reset().unwrap();
                }
            }
            (rewards, env.into_memory())
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn synthetic_rating_is_monotone_in_history(
        vote in 1.0f64..10.0,
        genre in 0usize..6,
        history in prop::collection::vec(1u8..=9, 0..5),
    ) {
        let user = fixtures::user(0, &["drama"], &["horror"]);
        let item = fixtures::movie(99, &[fixtures::GENRES[genre]], &[], None, vote);
        let past: Vec<_> = (0..history.len() as u32)
            .map(|i| fixtures::movie(i, &["comedy"], &[], None, 5.0))
            .collect();
        let retrieved = |bump: u8| -> Vec<RetrievedItem<'_>> {
            past.iter()
                .zip(&history)
                .map(|(item, r)| RetrievedItem { item, rating: r + bump, step: 0 })
                .collect()
        };
        let low = rate_synthetic(&user, &item, &retrieved(0)).unwrap();
        let high = rate_synthetic(&user, &item, &retrieved(1)).unwrap();
        prop_assert!(high >= low);
        prop_assert!(RatingScale::MOVIE.contains(low));
    }
}
