//! The memory module: user dataset, item dataset and the append-only
//! interaction history.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scale::{Domain, RatingScale};

pub const MIN_AGE: u8 = 4;
pub const MAX_AGE: u8 = 75;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("duplicate user id {0}")]
    DuplicateUser(u32),
    #[error("duplicate item id {0}")]
    DuplicateItem(u32),
    #[error("item {item_id}: vote_average {vote} outside the {domain} scale {min}..={max}")]
    ScaleViolation {
        item_id: u32,
        vote: String,
        domain: &'static str,
        min: u8,
        max: u8,
    },
    #[error("user {user_id}: {reason}")]
    InvalidUser { user_id: u32, reason: String },
    #[error("item {item_id}: {reason}")]
    InvalidItem { item_id: u32, reason: String },
    #[error("catalog mixes movie and book items")]
    MixedDomains,
    #[error("unknown user id {0}")]
    UnknownUser(u32),
    #[error("unknown item id {0}")]
    UnknownItem(u32),
    #[error("step {step} is not after the last recorded step {last}")]
    OutOfOrderStep { step: u64, last: u64 },
    #[error("rating {rating} outside the scale {min}..={max}")]
    OffScaleRating { rating: u8, min: u8, max: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
        }
    }

    pub fn pronoun(self) -> &'static str {
        match self {
            Gender::M => "he",
            Gender::F => "she",
        }
    }

    /// "boy"/"girl" under 18, "man"/"woman" otherwise.
    pub fn noun(self, age: u8) -> &'static str {
        match (self, age < 18) {
            (Gender::M, true) => "boy",
            (Gender::F, true) => "girl",
            (Gender::M, false) => "man",
            (Gender::F, false) => "woman",
        }
    }
}

/// Harness-only persona field that forces consistently high or low ratings
/// from the synthetic rater.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatingBias {
    #[default]
    None,
    AlwaysHigh,
    AlwaysLow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: u32,
    pub name: String,
    pub age: u8,
    pub gender: Gender,
    pub description: String,
    pub liked_genres: Vec<String>,
    pub disliked_genres: Vec<String>,
    pub hobby: String,
    pub job: String,
    #[serde(default)]
    pub rating_bias: RatingBias,
}

impl UserRecord {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let invalid = |reason: String| CatalogError::InvalidUser {
            user_id: self.user_id,
            reason,
        };
        if !(MIN_AGE..=MAX_AGE).contains(&self.age) {
            return Err(invalid(format!(
                "age {} outside {MIN_AGE}..={MAX_AGE}",
                self.age
            )));
        }
        if let Some(g) = self
            .liked_genres
            .iter()
            .find(|g| contains_genre(&self.disliked_genres, g))
        {
            return Err(invalid(format!("genre {g:?} is both liked and disliked")));
        }
        Ok(())
    }

    pub fn likes(&self, genre: &str) -> bool {
        contains_genre(&self.liked_genres, genre)
    }

    pub fn dislikes(&self, genre: &str) -> bool {
        contains_genre(&self.disliked_genres, genre)
    }
}

/// Genre tags compare case-insensitively.
pub fn genre_eq(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b)
}

pub(crate) fn contains_genre(set: &[String], genre: &str) -> bool {
    set.iter().any(|g| genre_eq(g, genre))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actor {
    pub name: String,
    pub gender: Gender,
}

/// Calendar date, serialized as `YYYY-MM-DD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReleaseDate {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl ReleaseDate {
    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.splitn(3, '-');
        let year: i32 = parts.next()?.parse().ok()?;
        let month: u8 = parts.next()?.parse().ok()?;
        let day: u8 = parts.next()?.parse().ok()?;
        let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        let days = match month {
            1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
            4 | 6 | 9 | 11 => 30,
            2 if leap => 29,
            2 => 28,
            _ => return None,
        };
        if day == 0 || day > days || s.len() != 10 {
            return None;
        }
        Some(ReleaseDate { year, month, day })
    }
}

impl fmt::Display for ReleaseDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl Serialize for ReleaseDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReleaseDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ReleaseDate::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid date {s:?}, want YYYY-MM-DD")))
    }
}

/// A movie or a book. For books `genres` holds the categories and `authors`
/// the author list; `actors` and `director` are movie-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: u32,
    pub title: String,
    pub overview: String,
    pub genres: Vec<String>,
    #[serde(default)]
    pub actors: Vec<Actor>,
    #[serde(default)]
    pub director: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authors: Vec<String>,
    pub release_date: ReleaseDate,
    pub vote_average: f64,
    pub domain: Domain,
}

impl ItemRecord {
    pub fn scale(&self) -> RatingScale {
        self.domain.scale()
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let scale = self.scale();
        if !scale.contains_real(self.vote_average) {
            return Err(CatalogError::ScaleViolation {
                item_id: self.item_id,
                vote: self.vote_average.to_string(),
                domain: self.domain.as_str(),
                min: scale.min,
                max: scale.max,
            });
        }
        let invalid = |reason: &str| CatalogError::InvalidItem {
            item_id: self.item_id,
            reason: reason.to_string(),
        };
        if self.genres.is_empty() {
            return Err(invalid("genres must be nonempty"));
        }
        if self.actors.len() > 2 {
            return Err(invalid("at most two actors are kept per item"));
        }
        Ok(())
    }

    /// Names that play the "people" role in feature similarity: actors for
    /// movies, authors for books.
    pub fn people(&self) -> Vec<&str> {
        match self.domain {
            Domain::Movie => self.actors.iter().map(|a| a.name.as_str()).collect(),
            Domain::Book => self.authors.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub user_id: u32,
    pub item_id: u32,
    pub stored_rating: u8,
    pub step: u64,
}

/// Users, items and interaction history.
///
/// Users and items are kept sorted by id; their position in that order is the
/// dense index used for observations and agent actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Memory {
    users: Vec<UserRecord>,
    items: Vec<ItemRecord>,
    history: Vec<InteractionRecord>,
    #[serde(skip)]
    user_pos: BTreeMap<u32, usize>,
    #[serde(skip)]
    item_pos: BTreeMap<u32, usize>,
    #[serde(skip)]
    by_user: BTreeMap<u32, Vec<usize>>,
    #[serde(skip)]
    by_pair: BTreeMap<(u32, u32), Vec<usize>>,
}

impl Memory {
    pub fn new(
        mut users: Vec<UserRecord>,
        mut items: Vec<ItemRecord>,
    ) -> Result<Self, CatalogError> {
        users.sort_by_key(|u| u.user_id);
        items.sort_by_key(|i| i.item_id);
        for pair in users.windows(2) {
            if pair[0].user_id == pair[1].user_id {
                return Err(CatalogError::DuplicateUser(pair[0].user_id));
            }
        }
        for pair in items.windows(2) {
            if pair[0].item_id == pair[1].item_id {
                return Err(CatalogError::DuplicateItem(pair[0].item_id));
            }
        }
        for u in &users {
            u.validate()?;
        }
        for i in &items {
            i.validate()?;
        }
        if let Some(first) = items.first() {
            if items.iter().any(|i| i.domain != first.domain) {
                return Err(CatalogError::MixedDomains);
            }
        }
        let mut memory = Memory {
            users,
            items,
            history: Vec::new(),
            user_pos: BTreeMap::new(),
            item_pos: BTreeMap::new(),
            by_user: BTreeMap::new(),
            by_pair: BTreeMap::new(),
        };
        memory.rebuild_indexes();
        Ok(memory)
    }

    fn rebuild_indexes(&mut self) {
        self.user_pos = self
            .users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.user_id, i))
            .collect();
        self.item_pos = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.item_id, i))
            .collect();
        self.by_user.clear();
        self.by_pair.clear();
        for (idx, rec) in self.history.iter().enumerate() {
            self.by_user.entry(rec.user_id).or_default().push(idx);
            self.by_pair
                .entry((rec.user_id, rec.item_id))
                .or_default()
                .push(idx);
        }
    }

    /// Rebuilds lookup tables after deserialization.
    pub fn reindex(mut self) -> Self {
        self.rebuild_indexes();
        self
    }

    /// Same users and items, empty history.
    pub fn fresh(&self) -> Self {
        let mut m = self.clone();
        m.history.clear();
        m.by_user.clear();
        m.by_pair.clear();
        m
    }

    pub fn domain(&self) -> Option<Domain> {
        self.items.first().map(|i| i.domain)
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn items(&self) -> &[ItemRecord] {
        &self.items
    }

    pub fn history(&self) -> &[InteractionRecord] {
        &self.history
    }

    pub fn user(&self, user_id: u32) -> Result<&UserRecord, CatalogError> {
        self.user_pos
            .get(&user_id)
            .map(|&i| &self.users[i])
            .ok_or(CatalogError::UnknownUser(user_id))
    }

    pub fn item(&self, item_id: u32) -> Result<&ItemRecord, CatalogError> {
        self.item_pos
            .get(&item_id)
            .map(|&i| &self.items[i])
            .ok_or(CatalogError::UnknownItem(item_id))
    }

    pub fn user_index(&self, user_id: u32) -> Result<usize, CatalogError> {
        self.user_pos
            .get(&user_id)
            .copied()
            .ok_or(CatalogError::UnknownUser(user_id))
    }

    pub fn item_index(&self, item_id: u32) -> Result<usize, CatalogError> {
        self.item_pos
            .get(&item_id)
            .copied()
            .ok_or(CatalogError::UnknownItem(item_id))
    }

    pub fn last_step(&self) -> Option<u64> {
        self.history.last().map(|r| r.step)
    }

    pub fn record_interaction(
        &mut self,
        user_id: u32,
        item_id: u32,
        stored_rating: u8,
        step: u64,
    ) -> Result<usize, CatalogError> {
        self.user(user_id)?;
        let scale = self.item(item_id)?.scale();
        if !scale.contains(stored_rating) {
            return Err(CatalogError::OffScaleRating {
                rating: stored_rating,
                min: scale.min,
                max: scale.max,
            });
        }
        if let Some(last) = self.last_step() {
            if step <= last {
                return Err(CatalogError::OutOfOrderStep { step, last });
            }
        }
        let id = self.history.len();
        self.history.push(InteractionRecord {
            user_id,
            item_id,
            stored_rating,
            step,
        });
        self.by_user.entry(user_id).or_default().push(id);
        self.by_pair.entry((user_id, item_id)).or_default().push(id);
        Ok(id)
    }

    /// All interactions of a user, oldest first.
    pub fn user_history(&self, user_id: u32) -> Result<Vec<(&ItemRecord, u8, u64)>, CatalogError> {
        self.user(user_id)?;
        Ok(self
            .user_records(user_id)
            .map(|r| {
                let item = &self.items[self.item_pos[&r.item_id]];
                (item, r.stored_rating, r.step)
            })
            .collect())
    }

    pub(crate) fn user_records(&self, user_id: u32) -> impl Iterator<Item = &InteractionRecord> {
        self.by_user
            .get(&user_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.history[i])
    }

    /// `n_ui` and the step distance to the latest `(u, i)` interaction,
    /// floored at 1. The distance is `None` when there is no prior interaction.
    pub fn recurrence_stats(
        &self,
        user_id: u32,
        item_id: u32,
        current_step: u64,
    ) -> Result<(usize, Option<u64>), CatalogError> {
        self.user(user_id)?;
        self.item(item_id)?;
        let Some(records) = self.by_pair.get(&(user_id, item_id)) else {
            return Ok((0, None));
        };
        let last = self.history[*records.last().expect("nonempty index")].step;
        Ok((
            records.len(),
            Some(current_step.saturating_sub(last).max(1)),
        ))
    }

    /// Latest interaction of `user_id` with each item, by item id.
    pub(crate) fn latest_per_item(&self, user_id: u32) -> impl Iterator<Item = &InteractionRecord> {
        self.by_pair
            .range((user_id, 0)..=(user_id, u32::MAX))
            .map(|(_, idx)| &self.history[*idx.last().expect("nonempty index")])
    }

    pub fn interaction_count(&self, user_id: u32, item_id: u32) -> usize {
        self.by_pair.get(&(user_id, item_id)).map_or(0, Vec::len)
    }
}
