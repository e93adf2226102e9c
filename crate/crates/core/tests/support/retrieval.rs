use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use suber_core::retrieval::{retrieve, EmbeddingTable, FeatureWeights};
use suber_core::{ItemRecord, Memory, RetrievalKind, RetrievalStrategy};

use super::{ensure, fixtures, Check};

pub const HISTORIES: usize = 1000;
const ACTORS: [&str; 5] = ["Ann Lee", "Bo Chen", "Cy Park", "Di Moss", "Ed Hart"];
const DIRECTORS: [&str; 3] = ["Sam Roe", "Tia Vance", "Uma Wolfe"];

fn random_item(rng: &mut ChaCha8Rng, id: u32) -> ItemRecord {
    let n_genres = rng.random_range(1..=3);
    let genres: Vec<&str> = fixtures::GENRES
        .choose_multiple(rng, n_genres)
        .copied()
        .collect();
    let n_actors = rng.random_range(0..=2);
    let actors: Vec<&str> = ACTORS.choose_multiple(rng, n_actors).copied().collect();
    let director = if rng.random_bool(0.2) {
        None
    } else {
        DIRECTORS.choose(rng).copied()
    };
    let vote = f64::from(rng.random_range(10..=100u32)) / 10.0;
    fixtures::movie(id, &genres, &actors, director, vote)
}

pub fn set_dice(a: &[String], b: &[String]) -> f64 {
    let a: BTreeSet<String> = a.iter().map(|s| s.to_lowercase()).collect();
    let b: BTreeSet<String> = b.iter().map(|s| s.to_lowercase()).collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * a.intersection(&b).count() as f64 / (a.len() + b.len()) as f64
}

fn names(item: &ItemRecord) -> Vec<String> {
    item.actors.iter().map(|a| a.name.clone()).collect()
}

fn feature_reference(q: &ItemRecord, c: &ItemRecord) -> f64 {
    let w = FeatureWeights::default();
    let same_director = f64::from(u8::from(q.director == c.director));
    let proximity = 1.0 - (q.vote_average - c.vote_average).abs() / 9.0;
    w.genres * set_dice(&q.genres, &c.genres)
        + w.people * set_dice(&names(q), &names(c))
        + w.director * same_director
        + w.rating * proximity
}

fn cosine_reference(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nx * ny)
}

/// Scores every distinct item the user rated (latest rating wins) and sorts
/// the whole candidate list.
fn reference(
    kind: RetrievalKind,
    k: usize,
    memory: &Memory,
    table: &EmbeddingTable,
    user_id: u32,
    query: &ItemRecord,
) -> Vec<(u32, u8, u64)> {
    let mut latest: BTreeMap<u32, (u8, u64)> = BTreeMap::new();
    for r in memory.history().iter().filter(|r| r.user_id == user_id) {
        latest.insert(r.item_id, (r.stored_rating, r.step));
    }
    let mut scored: Vec<(f64, u32, u8, u64)> = latest
        .iter()
        .map(|(&id, &(rating, step))| {
            let item = memory.item(id).unwrap();
            let score = match kind {
                RetrievalKind::Recency => 0.0,
                RetrievalKind::FeatureSimilarity => feature_reference(query, item),
                RetrievalKind::EmbeddingSimilarity => {
                    cosine_reference(table.get(query.item_id).unwrap(), table.get(id).unwrap())
                }
                RetrievalKind::None => unreachable!(),
            };
            (score, id, rating, step)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.3.cmp(&a.3)).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(k)
        .map(|(_, id, r, s)| (id, r, s))
        .collect()
}

/// Random catalogs and histories of up to 20 interactions across two users;
/// every strategy and `k` in 0..=5 must reproduce the reference ordering.
pub fn check(histories: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let kinds = [
        RetrievalKind::Recency,
        RetrievalKind::FeatureSimilarity,
        RetrievalKind::EmbeddingSimilarity,
    ];
    let mut nonempty = 0;
    for case in 0..histories {
        let n_items = rng.random_range(2..=12u32);
        let items: Vec<ItemRecord> = (0..n_items).map(|i| random_item(&mut rng, i)).collect();
        let users = vec![
            fixtures::user(0, &["drama"], &[]),
            fixtures::user(1, &["horror"], &[]),
        ];
        let mut memory = Memory::new(users, items).map_err(|e| e.to_string())?;

        // Small integer vectors so exact cosine ties actually occur.
        let mut table = EmbeddingTable::new();
        for i in 0..n_items {
            let mut v: Vec<f64> = (0..4)
                .map(|_| f64::from(rng.random_range(0..=2u8)))
                .collect();
            v[0] += 1.0;
            table.insert(i, v).map_err(|e| e.to_string())?;
        }

        let mut step = 0u64;
        for _ in 0..rng.random_range(0..=20) {
            step += rng.random_range(1..=3);
            let user = u32::from(rng.random_bool(0.25));
            let item = rng.random_range(0..n_items);
            memory
                .record_interaction(user, item, rng.random_range(1..=10), step)
                .map_err(|e| e.to_string())?;
        }
        let query = memory
            .item(rng.random_range(0..n_items))
            .map_err(|e| e.to_string())?
            .clone();
        let k = rng.random_range(0..=5);
        let distinct = memory
            .history()
            .iter()
            .filter(|r| r.user_id == 0)
            .map(|r| r.item_id)
            .collect::<BTreeSet<_>>()
            .len();

        for kind in kinds {
            let strategy = RetrievalStrategy::new(kind, k);
            let got: Vec<(u32, u8, u64)> = retrieve(&strategy, &memory, Some(&table), 0, &query)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|r| (r.item.item_id, r.rating, r.step))
                .collect();
            let want = reference(kind, k, &memory, &table, 0, &query);
            ensure(got == want, || {
                format!("case {case}, {kind:?} k={k}: {got:?} vs {want:?}")
            })?;
            ensure(got.len() == k.min(distinct), || {
                format!(
                    "case {case}, {kind:?}: {} items for k={k}, {distinct} distinct",
                    got.len()
                )
            })?;
            nonempty += usize::from(!got.is_empty());
        }

        let none = RetrievalStrategy::new(RetrievalKind::None, k);
        let empty = retrieve(&none, &memory, Some(&table), 0, &query).map_err(|e| e.to_string())?;
        ensure(empty.is_empty(), || {
            format!("case {case}: none strategy returned items")
        })?;
    }
    ensure(nonempty > histories, || {
        format!("only {nonempty} nonempty selections")
    })?;
    Ok(format!(
        "{histories} histories x 3 strategies, {nonempty} nonempty selections"
    ))
}
