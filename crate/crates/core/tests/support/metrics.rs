use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use suber_core::eval::{
    average_precision_at_10, liked_genre_stats, map_at_10, mrr_at_10, personalization_at_10,
    tv_similarity, RatingDistribution,
};
use suber_core::{ItemRecord, RatingScale, UserRecord};

use super::{ensure, fixtures, Check};

pub const INSTANCES: usize = 1000;
pub const TOL: f64 = 1e-9;

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= TOL
}

fn random_relevance(rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    let users = rng.random_range(1..=10);
    (0..users)
        .map(|_| {
            let len = rng.random_range(0..=10);
            (0..len).map(|_| rng.random_bool(0.4)).collect()
        })
        .collect()
}

pub fn ap_reference(list: &[bool]) -> f64 {
    let mut sum = 0.0;
    for k in 1..=list.len() {
        if list[k - 1] {
            sum += list[..k].iter().filter(|&&r| r).count() as f64 / k as f64;
        }
    }
    sum / 10.0
}

pub fn rr_reference(list: &[bool]) -> f64 {
    list.iter()
        .position(|&r| r)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

fn cosine_reference(a: &[u32], b: &[u32], n_items: u32) -> f64 {
    let va: Vec<f64> = (0..n_items)
        .map(|i| f64::from(u8::from(a.contains(&i))))
        .collect();
    let vb: Vec<f64> = (0..n_items)
        .map(|i| f64::from(u8::from(b.contains(&i))))
        .collect();
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let na: f64 = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn check_map_mrr() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..INSTANCES {
        let rel = random_relevance(&mut rng);
        let n = rel.len() as f64;
        let map_ref = rel.iter().map(|l| ap_reference(l)).sum::<f64>() / n;
        let mrr_ref = rel.iter().map(|l| rr_reference(l)).sum::<f64>() / n;
        let map = map_at_10(&rel).map_err(|e| e.to_string())?;
        let mrr = mrr_at_10(&rel).map_err(|e| e.to_string())?;
        ensure(close(map, map_ref), || {
            format!("case {case}: MAP {map} vs {map_ref}")
        })?;
        ensure(close(mrr, mrr_ref), || {
            format!("case {case}: MRR {mrr} vs {mrr_ref}")
        })?;
    }
    Ok(format!("{INSTANCES} MAP/MRR instances"))
}

pub fn check_personalization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for case in 0..INSTANCES {
        let users = rng.random_range(2..=10);
        let n_items = rng.random_range(10..=20u32);
        let all: Vec<u32> = (0..n_items).collect();
        let lists: Vec<Vec<u32>> = (0..users)
            .map(|_| {
                let len = rng.random_range(1..=10);
                all.choose_multiple(&mut rng, len).copied().collect()
            })
            .collect();
        let mut sum = 0.0;
        let mut pairs = 0;
        for i in 0..users {
            for j in 0..users {
                if i != j {
                    sum += cosine_reference(&lists[i], &lists[j], n_items);
                    pairs += 1;
                }
            }
        }
        let want = 1.0 - sum / f64::from(pairs);
        let got = personalization_at_10(&lists).map_err(|e| e.to_string())?;
        ensure(close(got, want), || {
            format!("case {case}: Pers {got} vs {want}")
        })?;
    }
    Ok(format!("{INSTANCES} personalization instances"))
}

pub fn check_liked_genre_stats() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let genres = fixtures::GENRES;
    for case in 0..INSTANCES {
        let n_items = rng.random_range(1..=20u32);
        let items: Vec<ItemRecord> = (0..n_items)
            .map(|i| {
                let k = rng.random_range(1..=2);
                let g: Vec<&str> = genres.choose_multiple(&mut rng, k).copied().collect();
                fixtures::movie(i, &g, &[], None, 6.0)
            })
            .collect();
        let users: Vec<UserRecord> = (0..rng.random_range(1..=10u32))
            .map(|u| {
                let liked: Vec<&str> = genres.choose_multiple(&mut rng, 2).copied().collect();
                let rest: Vec<&str> = genres
                    .iter()
                    .filter(|g| !liked.contains(g))
                    .copied()
                    .collect();
                let disliked: Vec<&str> = rest.choose_multiple(&mut rng, 2).copied().collect();
                fixtures::user(u, &liked, &disliked)
            })
            .collect();
        let lists: Vec<(&UserRecord, Vec<&ItemRecord>)> = users
            .iter()
            .map(|u| {
                let len = rng.random_range(1..=5.min(items.len()));
                (u, items.choose_multiple(&mut rng, len).collect())
            })
            .collect();

        let mut want = [0.0; 3];
        for (user, top) in &lists {
            let liked: BTreeSet<&str> = user.liked_genres.iter().map(String::as_str).collect();
            let disliked: BTreeSet<&str> =
                user.disliked_genres.iter().map(String::as_str).collect();
            let mut counts = [0usize; 3];
            for item in top {
                let g: BTreeSet<&str> = item.genres.iter().map(String::as_str).collect();
                let l = !g.is_disjoint(&liked);
                let d = !g.is_disjoint(&disliked);
                counts[if l && !d {
                    0
                } else if d && !l {
                    1
                } else {
                    2
                }] += 1;
            }
            for c in 0..3 {
                want[c] += counts[c] as f64 / top.len() as f64 / lists.len() as f64;
            }
        }
        let (l, d, n) = liked_genre_stats(&lists);
        ensure(
            close(l, want[0]) && close(d, want[1]) && close(n, want[2]),
            || format!("case {case}: ({l}, {d}, {n}) vs {want:?}"),
        )?;
        ensure(close(l + d + n, 1.0), || {
            format!("case {case}: shares sum to {}", l + d + n)
        })?;
    }
    Ok(format!("{INSTANCES} genre-share instances"))
}

pub fn check_tv_similarity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let scale = RatingScale::MOVIE;
    for case in 0..INSTANCES {
        let a: Vec<u8> = (0..rng.random_range(1..=50))
            .map(|_| rng.random_range(1..=10))
            .collect();
        let b: Vec<u8> = (0..rng.random_range(1..=50))
            .map(|_| rng.random_range(1..=10))
            .collect();
        let mut l1 = 0.0;
        for v in 1..=10u8 {
            let pa = a.iter().filter(|&&x| x == v).count() as f64 / a.len() as f64;
            let pb = b.iter().filter(|&&x| x == v).count() as f64 / b.len() as f64;
            l1 += (pa - pb).abs();
        }
        let want = 1.0 - l1 / 2.0;
        let p = RatingDistribution::from_ratings(a, scale).map_err(|e| e.to_string())?;
        let q = RatingDistribution::from_ratings(b, scale).map_err(|e| e.to_string())?;
        let pq = tv_similarity(&p, &q).map_err(|e| e.to_string())?;
        let qp = tv_similarity(&q, &p).map_err(|e| e.to_string())?;
        ensure(close(pq, want), || {
            format!("case {case}: TV {pq} vs {want}")
        })?;
        ensure(pq == qp, || format!("case {case}: asymmetric {pq} vs {qp}"))?;
    }
    Ok(format!("{INSTANCES} TV instances"))
}

/// AP@10 with hits at ranks 1 and 3, and two top-10 lists sharing 5 items.
pub fn check_fixed_points() -> Check {
    let ap = average_precision_at_10(&[true, false, true]).map_err(|e| e.to_string())?;
    ensure((ap - 0.1667).abs() < 1e-4, || format!("AP@10 = {ap}"))?;
    let a: Vec<u32> = (0..10).collect();
    let b: Vec<u32> = (5..15).collect();
    let pers = personalization_at_10(&[a, b]).map_err(|e| e.to_string())?;
    ensure(pers == 0.5, || format!("Pers@10 = {pers}"))?;
    Ok(format!("AP@10 = {ap:.4}, Pers@10 = {pers}"))
}

pub fn check_all() -> Check {
    let parts = [
        check_map_mrr()?,
        check_personalization()?,
        check_liked_genre_stats()?,
        check_tv_similarity()?,
        check_fixed_points()?,
    ];
    Ok(parts.join("; "))
}

/// Identity gives exactly 1 and disjoint supports exactly 0.
pub fn check_distribution_self_test() -> Check {
    let scale = RatingScale::MOVIE;
    let data = RatingDistribution::from_ratings([1u8, 3, 3, 7, 9, 10, 10, 10], scale)
        .map_err(|e| e.to_string())?;
    let same = tv_similarity(&data, &data).map_err(|e| e.to_string())?;
    ensure(same == 1.0, || format!("self similarity {same}"))?;
    let low =
        RatingDistribution::from_ratings([1u8, 2, 3, 4, 5], scale).map_err(|e| e.to_string())?;
    let high =
        RatingDistribution::from_ratings([6u8, 7, 8, 9, 10], scale).map_err(|e| e.to_string())?;
    let disjoint = tv_similarity(&low, &high).map_err(|e| e.to_string())?;
    ensure(disjoint == 0.0, || {
        format!("disjoint similarity {disjoint}")
    })?;
    Ok("self = 1.0, disjoint = 0.0".into())
}
