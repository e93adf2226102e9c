//! Selects the past interactions that go into a rating prompt.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{genre_eq, CatalogError, ItemRecord, Memory};
use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("cannot compare a {0} with a {1}")]
    CrossDomain(&'static str, &'static str),
    #[error("no embedding for item {0}")]
    MissingEmbedding(u32),
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity of a zero vector")]
    ZeroVector,
    #[error("embedding entry for item {0} is not finite")]
    NonFinite(u32),
    #[error("text has no tokens to embed")]
    EmptyText,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalKind {
    None,
    Recency,
    #[default]
    FeatureSimilarity,
    EmbeddingSimilarity,
}

/// Weights of the feature-similarity terms: genres, people (actors or
/// authors), same director, vote-average proximity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub genres: f64,
    pub people: f64,
    pub director: f64,
    pub rating: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        FeatureWeights {
            genres: 0.5,
            people: 0.2,
            director: 0.1,
            rating: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalStrategy {
    pub kind: RetrievalKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub weights: FeatureWeights,
}

fn default_k() -> usize {
    3
}

impl Default for RetrievalStrategy {
    fn default() -> Self {
        RetrievalStrategy {
            kind: RetrievalKind::default(),
            k: default_k(),
            weights: FeatureWeights::default(),
        }
    }
}

impl RetrievalStrategy {
    pub fn new(kind: RetrievalKind, k: usize) -> Self {
        RetrievalStrategy {
            kind,
            k,
            ..Default::default()
        }
    }
}

/// Item vectors keyed by item id, all of one dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<u32, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, item_id: u32, vector: Vec<f64>) -> Result<(), RetrievalError> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(RetrievalError::NonFinite(item_id));
        }
        if self.vectors.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch(self.dim, vector.len()));
        }
        self.vectors.insert(item_id, vector);
        Ok(())
    }

    /// Embeds every item with [`embed_text`] over [`item_text`].
    pub fn from_items<'a>(
        items: impl IntoIterator<Item = &'a ItemRecord>,
    ) -> Result<Self, RetrievalError> {
        let mut table = Self::new();
        for item in items {
            table.insert(item.item_id, embed_text(&item_text(item))?)?;
        }
        Ok(table)
    }

    pub fn get(&self, item_id: u32) -> Option<&[f64]> {
        self.vectors.get(&item_id).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[f64])> {
        self.vectors.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

/// Sorensen-Dice coefficient over string sets; 1 when both are empty.
/// Duplicates are ignored and comparison is case-insensitive.
pub fn dice_similarity<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> f64 {
    let a = dedup(a);
    let b = dedup(b);
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let common = a
        .iter()
        .filter(|x| b.iter().any(|y| genre_eq(x, y)))
        .count();
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

fn dedup<S: AsRef<str>>(xs: &[S]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::with_capacity(xs.len());
    for x in xs {
        let x = x.as_ref();
        if !out.iter().any(|y| genre_eq(x, y)) {
            out.push(x);
        }
    }
    out
}

pub fn feature_score(
    query: &ItemRecord,
    candidate: &ItemRecord,
    weights: &FeatureWeights,
) -> Result<f64, RetrievalError> {
    if query.domain != candidate.domain {
        return Err(RetrievalError::CrossDomain(
            query.domain.as_str(),
            candidate.domain.as_str(),
        ));
    }
    let genres = dice_similarity(&query.genres, &candidate.genres);
    let people = dice_similarity(&query.people(), &candidate.people());
    let director = match (&query.director, &candidate.director) {
        (Some(a), Some(b)) => f64::from(u8::from(a == b)),
        (None, None) => 1.0,
        _ => 0.0,
    };
    let span = query.scale().span();
    let rating = 1.0 - math::abs(query.vote_average - candidate.vote_average) / span;
    Ok(weights.genres * genres
        + weights.people * people
        + weights.director * director
        + weights.rating * rating)
}

pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64, RetrievalError> {
    if x.len() != y.len() {
        return Err(RetrievalError::DimensionMismatch(x.len(), y.len()));
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = math::sqrt(x.iter().map(|a| a * a).sum());
    let ny = math::sqrt(y.iter().map(|a| a * a).sum());
    if nx == 0.0 || ny == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

pub const EMBED_DIM: usize = 256;

/// Deterministic hashed bag-of-words embedding: lowercase, split on
/// non-alphanumerics, FNV-1a each token into one of [`EMBED_DIM`] buckets,
/// count, L2-normalize.
pub fn embed_text(text: &str) -> Result<Vec<f64>, RetrievalError> {
    let mut v = vec![0.0; EMBED_DIM];
    let mut any = false;
    for token in tokens(text) {
        v[token_bucket(&token)] += 1.0;
        any = true;
    }
    if !any {
        return Err(RetrievalError::EmptyText);
    }
    let norm = math::sqrt(v.iter().map(|a| a * a).sum());
    v.iter_mut().for_each(|a| *a /= norm);
    Ok(v)
}

pub(crate) fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Bucket a lowercase token hashes to.
pub fn token_bucket(token: &str) -> usize {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    (h % EMBED_DIM as u64) as usize
}

/// Text embedded for an item: title, overview and genres.
pub fn item_text(item: &ItemRecord) -> String {
    let mut s = String::with_capacity(item.title.len() + item.overview.len() + 64);
    s.push_str(&item.title);
    s.push_str(". ");
    s.push_str(&item.overview);
    for g in &item.genres {
        s.push(' ');
        s.push_str(g);
    }
    s
}

/// One retrieved past interaction; `rating` is the stored canonical rating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievedItem<'a> {
    pub item: &'a ItemRecord,
    pub rating: u8,
    pub step: u64,
}

/// Up to `k` past interactions of `user_id` relevant to `query`.
///
/// Only the latest interaction per item is a candidate. Similarity strategies
/// rank by score, then newer first, then lower item id.
pub fn retrieve<'a>(
    strategy: &RetrievalStrategy,
    memory: &'a Memory,
    embeddings: Option<&EmbeddingTable>,
    user_id: u32,
    query: &ItemRecord,
) -> Result<Vec<RetrievedItem<'a>>, RetrievalError> {
    memory.user(user_id)?;
    if strategy.kind == RetrievalKind::None || strategy.k == 0 {
        return Ok(Vec::new());
    }
    let mut scored: Vec<(f64, RetrievedItem<'a>)> = Vec::new();
    for rec in memory.latest_per_item(user_id) {
        let (item_id, rating, step) = (rec.item_id, rec.stored_rating, rec.step);
        let item = memory.item(item_id)?;
        let score = match strategy.kind {
            RetrievalKind::Recency => 0.0,
            RetrievalKind::FeatureSimilarity => feature_score(query, item, &strategy.weights)?,
            RetrievalKind::EmbeddingSimilarity => {
                let table = embeddings.ok_or(RetrievalError::MissingEmbedding(query.item_id))?;
                let q = table
                    .get(query.item_id)
                    .ok_or(RetrievalError::MissingEmbedding(query.item_id))?;
                let c = table
                    .get(item_id)
                    .ok_or(RetrievalError::MissingEmbedding(item_id))?;
                cosine_similarity(q, c)?
            }
            RetrievalKind::None => unreachable!(),
        };
        scored.push((score, RetrievedItem { item, rating, step }));
    }
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.total_cmp(sa)
            .then(b.step.cmp(&a.step))
            .then(a.item.item_id.cmp(&b.item.item_id))
    });
    scored.truncate(strategy.k);
    Ok(scored.into_iter().map(|(_, r)| r).collect())
}
