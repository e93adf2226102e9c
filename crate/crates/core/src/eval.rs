//! Ranking metrics, genre alignment, rating-distribution similarity and the
//! ablation suites.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, Recommender};
use crate::catalog::{contains_genre, CatalogError, ItemRecord, Memory, RatingBias, UserRecord};
use crate::env::{EnvError, Pipeline, SuberEnv};
use crate::math;
use crate::rater::{Rater, RaterError};
use crate::scale::{Domain, RatingScale};

pub const TOP_K: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no users to evaluate")]
    NoUsers,
    #[error("personalization needs at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("recommendation list of length {0} exceeds 10")]
    ListTooLong(usize),
    #[error("distribution supports differ: {0} vs {1} points")]
    SupportMismatch(usize, usize),
    #[error("distribution is empty or not normalised")]
    BadDistribution,
    #[error("missing fixture: {0}")]
    MissingFixture(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Minimum canonical rating counted as relevant: 7 for movies, 4 for books.
pub fn relevance_threshold(domain: Domain) -> u8 {
    match domain {
        Domain::Movie => 7,
        Domain::Book => 4,
    }
}

/// `(1/10) * sum_k P@k * rel(k)` over the first ten ranks.
pub fn average_precision_at_10(relevant: &[bool]) -> Result<f64, EvalError> {
    if relevant.len() > TOP_K {
        return Err(EvalError::ListTooLong(relevant.len()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &rel) in relevant.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / TOP_K as f64)
}

pub fn map_at_10(relevance: &[Vec<bool>]) -> Result<f64, EvalError> {
    if relevance.is_empty() {
        return Err(EvalError::NoUsers);
    }
    let mut total = 0.0;
    for list in relevance {
        total += average_precision_at_10(list)?;
    }
    Ok(total / relevance.len() as f64)
}

pub fn mrr_at_10(relevance: &[Vec<bool>]) -> Result<f64, EvalError> {
    if relevance.is_empty() {
        return Err(EvalError::NoUsers);
    }
    let mut total = 0.0;
    for list in relevance {
        if list.len() > TOP_K {
            return Err(EvalError::ListTooLong(list.len()));
        }
        if let Some(rank) = list.iter().position(|&r| r) {
            total += 1.0 / (rank + 1) as f64;
        }
    }
    Ok(total / relevance.len() as f64)
}

/// One minus the mean pairwise cosine similarity of the users' binary
/// recommendation vectors.
pub fn personalization_at_10(lists: &[Vec<u32>]) -> Result<f64, EvalError> {
    if lists.len() < 2 {
        return Err(EvalError::TooFewUsers(lists.len()));
    }
    let sets: Vec<Vec<u32>> = lists
        .iter()
        .map(|l| {
            let mut s = l.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[..i] {
            pairs += 1;
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let overlap = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
            sum += overlap as f64 / math::sqrt((a.len() * b.len()) as f64);
        }
    }
    Ok(1.0 - sum / pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenreClass {
    Liked,
    Disliked,
    Neutral,
}

pub fn classify(user: &UserRecord, item: &ItemRecord) -> GenreClass {
    let liked = item
        .genres
        .iter()
        .any(|g| contains_genre(&user.liked_genres, g));
    let disliked = item
        .genres
        .iter()
        .any(|g| contains_genre(&user.disliked_genres, g));
    match (liked, disliked) {
        (true, false) => GenreClass::Liked,
        (false, true) => GenreClass::Disliked,
        _ => GenreClass::Neutral,
    }
}

/// Fractions of liked, disliked and neutral items, averaged per user and
/// then over users. Users with empty lists are skipped.
pub fn liked_genre_stats(lists: &[(&UserRecord, Vec<&ItemRecord>)]) -> (f64, f64, f64) {
    let mut acc = (0.0, 0.0, 0.0);
    let mut users = 0usize;
    for (user, items) in lists {
        if items.is_empty() {
            continue;
        }
        users += 1;
        let n = items.len() as f64;
        for item in items {
            match classify(user, item) {
                GenreClass::Liked => acc.0 += 1.0 / n,
                GenreClass::Disliked => acc.1 += 1.0 / n,
                GenreClass::Neutral => acc.2 += 1.0 / n,
            }
        }
    }
    if users == 0 {
        return (0.0, 0.0, 0.0);
    }
    let u = users as f64;
    (acc.0 / u, acc.1 / u, acc.2 / u)
}

/// Probabilities over the points of a rating scale, lowest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingDistribution {
    pub probs: Vec<f64>,
}

impl RatingDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, EvalError> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty()
            || probs.iter().any(|p| p.is_nan() || *p < 0.0)
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(EvalError::BadDistribution);
        }
        Ok(RatingDistribution { probs })
    }

    /// Empirical distribution of on-scale ratings; off-scale values are ignored.
    pub fn from_ratings(
        ratings: impl IntoIterator<Item = u8>,
        scale: RatingScale,
    ) -> Result<Self, EvalError> {
        let mut counts = vec![0u64; scale.len()];
        let mut n = 0u64;
        for r in ratings {
            if scale.contains(r) {
                counts[usize::from(r - scale.min)] += 1;
                n += 1;
            }
        }
        if n == 0 {
            return Err(EvalError::BadDistribution);
        }
        Ok(RatingDistribution {
            probs: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        })
    }
}

/// `1 - (1/2) sum |p_j - q_j|`, computed as the overlap `sum min(p_j, q_j)`
/// over the mean total mass. The two agree for distributions; the overlap
/// form is exactly 1 for identical inputs and exactly 0 for disjoint ones.
pub fn tv_similarity(p: &RatingDistribution, q: &RatingDistribution) -> Result<f64, EvalError> {
    if p.probs.len() != q.probs.len() {
        return Err(EvalError::SupportMismatch(p.probs.len(), q.probs.len()));
    }
    let overlap: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| a.min(*b)).sum();
    let mass = 0.5 * (p.probs.iter().sum::<f64>() + q.probs.iter().sum::<f64>());
    Ok((overlap / mass).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub map_at_10: f64,
    pub mrr_at_10: f64,
    pub pers_at_10: f64,
    pub pct_liked: f64,
    pub pct_disliked: f64,
    pub pct_neutral: f64,
    pub mean_reward: f64,
    pub users: usize,
}

/// Scores `agent` against every user of `env`, whose memory should be
/// fresh: top-10 lists rated by the environment's rater, top-5 genre
/// alignment, and the mean reward of one greedy episode per user.
pub fn evaluate_recommender<R: Rater, A: Recommender + ?Sized>(
    agent: &mut A,
    env: &mut SuberEnv<R>,
) -> Result<MetricsReport, EvalError> {
    let domain = env
        .memory()
        .domain()
        .ok_or_else(|| EvalError::MissingFixture("catalog has no items".into()))?;
    let threshold = relevance_threshold(domain);
    let n_items = env.n_items();
    let k = TOP_K.min(n_items);
    let user_ids: Vec<u32> = env.memory().users().iter().map(|u| u.user_id).collect();
    if user_ids.is_empty() {
        return Err(EvalError::NoUsers);
    }
    let empty_mask = vec![false; n_items];
    let mut relevance = Vec::with_capacity(user_ids.len());
    let mut lists = Vec::with_capacity(user_ids.len());
    for (u, &user_id) in user_ids.iter().enumerate() {
        let top = agent.recommend(u, &empty_mask, k)?;
        let mut rel = Vec::with_capacity(k);
        let mut ids = Vec::with_capacity(k);
        for &idx in &top {
            let item_id = env.memory().items()[idx].item_id;
            let outcome = env.query_rating(user_id, item_id, 1)?;
            rel.push(outcome.raw >= threshold);
            ids.push(item_id);
        }
        relevance.push(rel);
        lists.push(ids);
    }
    let memory = env.memory();
    let top5: Vec<(&UserRecord, Vec<&ItemRecord>)> = lists
        .iter()
        .enumerate()
        .map(|(u, ids)| {
            let items = ids
                .iter()
                .take(5)
                .map(|id| memory.item(*id).expect("listed item exists"))
                .collect();
            (&memory.users()[u], items)
        })
        .collect();
    let (pct_liked, pct_disliked, pct_neutral) = liked_genre_stats(&top5);
    let pers_at_10 = if lists.len() >= 2 {
        personalization_at_10(&lists)?
    } else {
        0.0
    };
    let map = map_at_10(&relevance)?;
    let mrr = mrr_at_10(&relevance)?;

    let mut reward_sum = 0.0;
    let mut steps = 0usize;
    for (u, &user_id) in user_ids.iter().enumerate() {
        env.reset_to(user_id)?;
        for _ in 0..env.config().horizon {
            let mask = env.seen_mask().expect("episode running").to_vec();
            if mask.iter().all(|&m| m) {
                break;
            }
            let action = agent.recommend(u, &mask, 1)?[0];
            let item_id = env.memory().items()[action].item_id;
            let result = env.step(item_id)?;
            reward_sum += result.reward;
            steps += 1;
            if result.terminated {
                break;
            }
        }
    }
    Ok(MetricsReport {
        map_at_10: map,
        mrr_at_10: mrr,
        pers_at_10,
        pct_liked,
        pct_disliked,
        pct_neutral,
        mean_reward: if steps == 0 {
            0.0
        } else {
            reward_sum / steps as f64
        },
        users: user_ids.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Genres,
    HighLow,
    Collections,
    Distribution,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Genres,
        Suite::HighLow,
        Suite::Collections,
        Suite::Distribution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Genres => "genres",
            Suite::HighLow => "high_low",
            Suite::Collections => "collections",
            Suite::Distribution => "distribution",
        }
    }

    /// Book catalogs have no distribution suite.
    pub fn applies_to(self, domain: Domain) -> bool {
        !(self == Suite::Distribution && domain == Domain::Book)
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Franchise {
    pub name: String,
    pub item_ids: Vec<u32>,
}

/// One reference rating on the canonical scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRating {
    pub item_id: u32,
    pub rating: u8,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteFixtures {
    pub personas: Vec<UserRecord>,
    pub franchises: Vec<Franchise>,
    pub reference: Vec<ReferenceRating>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    /// Success cut for high ratings; domain default when `None`.
    pub hi_cut: Option<u8>,
    pub lo_cut: Option<u8>,
    pub items_per_persona: usize,
    pub users_per_franchise: usize,
    pub fillers: usize,
    pub distribution_samples: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            hi_cut: None,
            lo_cut: None,
            items_per_persona: 10,
            users_per_franchise: 2,
            fillers: 5,
            distribution_samples: 10_000,
            repetitions: 3,
            seed: 0,
        }
    }
}

impl SuiteConfig {
    /// `(hi_cut, lo_cut)`: 8/5 for movies, 4/2 for books unless overridden.
    pub fn cuts(&self, domain: Domain) -> (u8, u8) {
        let (hi, lo) = match domain {
            Domain::Movie => (8, 5),
            Domain::Book => (4, 2),
        };
        (self.hi_cut.unwrap_or(hi), self.lo_cut.unwrap_or(lo))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteScore {
    pub score: f64,
    pub stderr: f64,
    pub repetitions: Vec<f64>,
    pub queries: usize,
    /// Queries whose rater answer could not be parsed; counted as failures.
    pub parse_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub domain: Domain,
    pub hi_cut: u8,
    pub lo_cut: u8,
    pub genres: Option<SuiteScore>,
    pub high_low: Option<SuiteScore>,
    pub collections: Option<SuiteScore>,
    pub distribution_similarity: Option<SuiteScore>,
    pub aggregated: f64,
    pub notes: Vec<String>,
}

impl AblationReport {
    pub fn suites(&self) -> impl Iterator<Item = (Suite, &SuiteScore)> {
        [
            (Suite::Genres, &self.genres),
            (Suite::HighLow, &self.high_low),
            (Suite::Collections, &self.collections),
            (Suite::Distribution, &self.distribution_similarity),
        ]
        .into_iter()
        .filter_map(|(s, v)| v.as_ref().map(|v| (s, v)))
    }
}

/// Mean of the present suite scores; the distribution suite is dropped for
/// books.
pub fn aggregate_report(
    domain: Domain,
    cuts: (u8, u8),
    scores: BTreeMap<Suite, SuiteScore>,
) -> AblationReport {
    let mut scores = scores;
    let mut take = |s: Suite| scores.remove(&s).filter(|_| s.applies_to(domain));
    let mut report = AblationReport {
        domain,
        hi_cut: cuts.0,
        lo_cut: cuts.1,
        genres: take(Suite::Genres),
        high_low: take(Suite::HighLow),
        collections: take(Suite::Collections),
        distribution_similarity: take(Suite::Distribution),
        aggregated: 0.0,
        notes: vec![alloc::format!(
            "success cuts hi >= {} and lo <= {} are configurable assumptions",
            cuts.0,
            cuts.1
        )],
    };
    let present: Vec<f64> = report.suites().map(|(_, s)| s.score).collect();
    report.aggregated = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    report
}

/// Everything the suites query through. `memory` must hold the catalog
/// users, the persona users and all items, with no history.
pub struct SuiteContext<'a, R: ?Sized> {
    pub pipeline: Pipeline<'a>,
    pub rater: &'a R,
    pub memory: &'a Memory,
    pub fixtures: &'a SuiteFixtures,
}

#[derive(Default)]
struct Tally {
    successes: usize,
    total: usize,
    parse_failures: usize,
}

impl<R: Rater + ?Sized> SuiteContext<'_, R> {
    fn domain(&self) -> Result<Domain, EvalError> {
        self.memory
            .domain()
            .ok_or_else(|| EvalError::MissingFixture("catalog has no items".into()))
    }

    fn persona_ids(&self) -> Vec<u32> {
        self.fixtures.personas.iter().map(|p| p.user_id).collect()
    }

    /// Catalog users that are not personas.
    fn regular_users(&self) -> Vec<u32> {
        let personas = self.persona_ids();
        self.memory
            .users()
            .iter()
            .map(|u| u.user_id)
            .filter(|id| !personas.contains(id))
            .collect()
    }

    /// Raw rating, or `None` when the answer did not parse.
    fn rate<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        memory: &Memory,
        user_id: u32,
        item_id: u32,
        tally: &mut Tally,
    ) -> Result<Option<u8>, EvalError> {
        tally.total += 1;
        match self
            .pipeline
            .query(rng, self.rater, memory, user_id, item_id, 1)
        {
            Ok(q) => Ok(Some(q.raw)),
            Err(EnvError::Rater {
                source: RaterError::NoParse { .. },
                ..
            }) => {
                tally.parse_failures += 1;
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn genres_once<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        cuts: (u8, u8),
        cfg: &SuiteConfig,
    ) -> Result<Tally, EvalError> {
        let mut tally = Tally::default();
        for persona in &self.fixtures.personas {
            if persona.rating_bias != RatingBias::None || persona.liked_genres.is_empty() {
                continue;
            }
            let mut liked = Vec::new();
            let mut disliked = Vec::new();
            for item in self.memory.items() {
                match classify(persona, item) {
                    GenreClass::Liked => liked.push(item.item_id),
                    GenreClass::Disliked => disliked.push(item.item_id),
                    GenreClass::Neutral => {}
                }
            }
            let n_liked = cfg.items_per_persona.div_ceil(2);
            let n_disliked = cfg.items_per_persona - n_liked;
            let picks_liked: Vec<u32> = liked.choose_multiple(rng, n_liked).copied().collect();
            let picks_disliked: Vec<u32> =
                disliked.choose_multiple(rng, n_disliked).copied().collect();
            for id in picks_liked {
                if let Some(r) = self.rate(rng, self.memory, persona.user_id, id, &mut tally)? {
                    tally.successes += usize::from(r >= cuts.0);
                }
            }
            for id in picks_disliked {
                if let Some(r) = self.rate(rng, self.memory, persona.user_id, id, &mut tally)? {
                    tally.successes += usize::from(r <= cuts.1);
                }
            }
        }
        Ok(tally)
    }

    fn high_low_once<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        cuts: (u8, u8),
        cfg: &SuiteConfig,
    ) -> Result<Tally, EvalError> {
        let mut tally = Tally::default();
        let items: Vec<u32> = self.memory.items().iter().map(|i| i.item_id).collect();
        for persona in &self.fixtures.personas {
            if persona.rating_bias == RatingBias::None {
                continue;
            }
            let picks: Vec<u32> = items
                .choose_multiple(rng, cfg.items_per_persona)
                .copied()
                .collect();
            for id in picks {
                if let Some(r) = self.rate(rng, self.memory, persona.user_id, id, &mut tally)? {
                    let ok = match persona.rating_bias {
                        RatingBias::AlwaysHigh => r >= cuts.0,
                        _ => r <= cuts.1,
                    };
                    tally.successes += usize::from(ok);
                }
            }
        }
        Ok(tally)
    }

    fn collections_once<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        cuts: (u8, u8),
        cfg: &SuiteConfig,
    ) -> Result<Tally, EvalError> {
        let mut tally = Tally::default();
        let users = self.regular_users();
        if users.is_empty() {
            return Err(EvalError::MissingFixture(
                "collections suite needs catalog users".into(),
            ));
        }
        for franchise in &self.fixtures.franchises {
            let members: Vec<&ItemRecord> = franchise
                .item_ids
                .iter()
                .filter_map(|id| self.memory.item(*id).ok())
                .collect();
            if members.len() < 2 {
                continue;
            }
            let others: Vec<&ItemRecord> = self
                .memory
                .items()
                .iter()
                .filter(|i| !franchise.item_ids.contains(&i.item_id))
                .collect();
            let picked: Vec<u32> = users
                .choose_multiple(rng, cfg.users_per_franchise)
                .copied()
                .collect();
            for user_id in picked {
                let held = *members.choose(rng).expect("at least two members");
                let fillers: Vec<&ItemRecord> =
                    others.choose_multiple(rng, cfg.fillers).copied().collect();
                let scale = held.scale();
                for high in [true, false] {
                    let mut seeded: Vec<(u32, u8)> =
                        members
                            .iter()
                            .filter(|m| m.item_id != held.item_id)
                            .map(|m| (m.item_id, if high { scale.max } else { scale.min }))
                            .chain(fillers.iter().map(|f| {
                                (f.item_id, scale.clamp(math::round(f.vote_average) as i32))
                            }))
                            .collect();
                    seeded.shuffle(rng);
                    let mut memory = self.memory.clone();
                    for (step, (item_id, rating)) in seeded.into_iter().enumerate() {
                        memory.record_interaction(user_id, item_id, rating, step as u64)?;
                    }
                    if let Some(r) = self.rate(rng, &memory, user_id, held.item_id, &mut tally)? {
                        let ok = if high { r >= cuts.0 } else { r <= cuts.1 };
                        tally.successes += usize::from(ok);
                    }
                }
            }
        }
        Ok(tally)
    }

    fn distribution_once<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        cfg: &SuiteConfig,
    ) -> Result<(f64, Tally), EvalError> {
        let domain = self.domain()?;
        let scale = domain.scale();
        let mut by_item: BTreeMap<u32, Vec<u8>> = BTreeMap::new();
        for r in &self.fixtures.reference {
            if self.memory.item(r.item_id).is_ok() && scale.contains(r.rating) {
                by_item.entry(r.item_id).or_default().push(r.rating);
            }
        }
        if by_item.is_empty() {
            return Err(EvalError::MissingFixture(
                "no reference ratings for catalog items".into(),
            ));
        }
        let users = self.regular_users();
        if users.is_empty() {
            return Err(EvalError::MissingFixture(
                "distribution suite needs catalog users".into(),
            ));
        }
        let keyed: Vec<(&u32, &Vec<u8>)> = by_item.iter().collect();
        let mut reference = Vec::with_capacity(cfg.distribution_samples);
        let mut simulated = Vec::with_capacity(cfg.distribution_samples);
        let mut tally = Tally::default();
        for _ in 0..cfg.distribution_samples {
            let (item_id, ratings) = *keyed.choose(rng).expect("nonempty");
            reference.push(*ratings.choose(rng).expect("nonempty"));
            let user_id = *users.choose(rng).expect("nonempty");
            if let Some(r) = self.rate(rng, self.memory, user_id, *item_id, &mut tally)? {
                simulated.push(r);
            }
        }
        let p = RatingDistribution::from_ratings(reference, scale)?;
        let q = RatingDistribution::from_ratings(simulated, scale)?;
        Ok((tv_similarity(&q, &p)?, tally))
    }

    /// Runs `suite` `cfg.repetitions` times with derived seeds.
    pub fn run_suite(&self, suite: Suite, cfg: &SuiteConfig) -> Result<SuiteScore, EvalError> {
        let domain = self.domain()?;
        let cuts = cfg.cuts(domain);
        let reps = cfg.repetitions.max(1);
        let mut scores = Vec::with_capacity(reps);
        let mut queries = 0;
        let mut parse_failures = 0;
        for rep in 0..reps {
            let seed = cfg
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(suite.tag() << 32 | rep as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (score, tally) = match suite {
                Suite::Genres => ratio(self.genres_once(&mut rng, cuts, cfg)?, "genre personas")?,
                Suite::HighLow => ratio(
                    self.high_low_once(&mut rng, cuts, cfg)?,
                    "high/low personas",
                )?,
                Suite::Collections => ratio(
                    self.collections_once(&mut rng, cuts, cfg)?,
                    "franchises with two or more catalog items",
                )?,
                Suite::Distribution => self.distribution_once(&mut rng, cfg)?,
            };
            queries += tally.total;
            parse_failures += tally.parse_failures;
            scores.push(score);
        }
        let mean = scores.iter().sum::<f64>() / reps as f64;
        let stderr = if reps > 1 {
            let var =
                scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (reps - 1) as f64;
            math::sqrt(var / reps as f64)
        } else {
            0.0
        };
        Ok(SuiteScore {
            score: mean,
            stderr,
            repetitions: scores,
            queries,
            parse_failures,
        })
    }

    /// Runs the applicable `suites` and aggregates them.
    pub fn run_ablation(
        &self,
        suites: &[Suite],
        cfg: &SuiteConfig,
    ) -> Result<AblationReport, EvalError> {
        let domain = self.domain()?;
        let mut scores = BTreeMap::new();
        for &suite in suites {
            if suite.applies_to(domain) {
                scores.insert(suite, self.run_suite(suite, cfg)?);
            }
        }
        Ok(aggregate_report(domain, cfg.cuts(domain), scores))
    }
}

fn ratio(tally: Tally, what: &str) -> Result<(f64, Tally), EvalError> {
    if tally.total == 0 {
        return Err(EvalError::MissingFixture(what.to_string()));
    }
    Ok((tally.successes as f64 / tally.total as f64, tally))
}
