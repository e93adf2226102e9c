//! Rating sources: the [`Rater`] trait, rating-text parsing, and the
//! deterministic synthetic-persona rater used for offline runs and tests.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{contains_genre, ItemRecord, RatingBias, UserRecord};
use crate::math;
use crate::prompting::{
    present_scale_value, RenderedPrompt, ScaleEncoding, ScaleValue, NUMBER_WORDS,
};
use crate::retrieval::RetrievedItem;
use crate::scale::{Domain, RatingScale};
use crate::usergen::UserSeed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RaterError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("no rating found in {raw:?}")]
    NoParse { raw: String },
    #[error("cannot rate a {0} against a {1} history")]
    CrossDomain(&'static str, &'static str),
    #[error("invalid rater configuration: {0}")]
    Config(String),
}

/// Which rating source an environment uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RaterKind {
    LlmHttp {
        endpoint: String,
        model: String,
        #[serde(default = "default_max_tokens")]
        max_tokens: u32,
        #[serde(default)]
        temperature: f64,
        /// Total tries per request, counting the first.
        #[serde(default = "default_max_attempts")]
        max_attempts: u32,
        /// Send the answer prefix as a trailing assistant message for the
        /// model to continue; otherwise append it to the user message.
        #[serde(default = "default_true")]
        assistant_prefill: bool,
    },
    #[default]
    SyntheticPersona,
}

fn default_max_tokens() -> u32 {
    8
}

fn default_max_attempts() -> u32 {
    3
}

fn default_true() -> bool {
    true
}

impl RaterKind {
    pub fn validate(&self) -> Result<(), RaterError> {
        match self {
            RaterKind::LlmHttp {
                max_tokens,
                temperature,
                endpoint,
                max_attempts,
                ..
            } => {
                if *max_tokens < 1 {
                    return Err(RaterError::Config("max_tokens must be at least 1".into()));
                }
                if *max_attempts < 1 {
                    return Err(RaterError::Config("max_attempts must be at least 1".into()));
                }
                if !(temperature.is_finite() && *temperature >= 0.0) {
                    return Err(RaterError::Config("temperature must be >= 0".into()));
                }
                if endpoint.is_empty() {
                    return Err(RaterError::Config("endpoint is empty".into()));
                }
                Ok(())
            }
            RaterKind::SyntheticPersona => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingOutcome {
    pub raw_text: String,
    pub rating: u8,
}

/// One rating query. Prompt-driven raters read `prompt`; the synthetic rater
/// reads the structured fields. Retrieved ratings are canonical.
#[derive(Debug, Clone, Copy)]
pub struct RatingRequest<'a> {
    pub prompt: &'a RenderedPrompt,
    pub encoding: ScaleEncoding,
    pub user: &'a UserRecord,
    pub item: &'a ItemRecord,
    pub retrieved: &'a [RetrievedItem<'a>],
}

/// Free-text user description request.
#[derive(Debug, Clone, Copy)]
pub struct DescriptionRequest<'a> {
    pub seed: &'a UserSeed,
    pub name: &'a str,
    pub domain: Domain,
    /// Fully rendered description prompt, ending in `"<pronoun> is "`.
    pub prompt: &'a str,
}

pub trait Rater {
    fn rate(&self, request: &RatingRequest<'_>) -> Result<RatingOutcome, RaterError>;

    /// Returns the complete description, starting with `"<pronoun> is "`.
    fn describe(&self, request: &DescriptionRequest<'_>) -> Result<String, RaterError>;
}

impl<R: Rater + ?Sized> Rater for &R {
    fn rate(&self, request: &RatingRequest<'_>) -> Result<RatingOutcome, RaterError> {
        (**self).rate(request)
    }

    fn describe(&self, request: &DescriptionRequest<'_>) -> Result<String, RaterError> {
        (**self).describe(request)
    }
}

impl<R: Rater + ?Sized> Rater for Box<R> {
    fn rate(&self, request: &RatingRequest<'_>) -> Result<RatingOutcome, RaterError> {
        (**self).rate(request)
    }

    fn describe(&self, request: &DescriptionRequest<'_>) -> Result<String, RaterError> {
        (**self).describe(request)
    }
}

/// Canonical scale a given encoding maps onto.
pub fn canonical_scale(enc: ScaleEncoding) -> RatingScale {
    enc.domain().scale()
}

/// First rating token after the answer prefix (or from the start, when the
/// prefix is not echoed), converted to the canonical scale.
pub fn parse_rating(raw_text: &str, enc: ScaleEncoding) -> Result<u8, RaterError> {
    const MARKER: &str = "assign a rating of ";
    let tail = match raw_text.find(MARKER) {
        Some(pos) => &raw_text[pos + MARKER.len()..],
        None => raw_text,
    };
    for token in tail
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let found = match enc {
            ScaleEncoding::WordsOneTen => NUMBER_WORDS
                .iter()
                .position(|w| w.eq_ignore_ascii_case(token))
                .map(|i| i as u8 + 1),
            _ => parse_small_int(token).and_then(|v| {
                let (lo, hi, shift) = match enc {
                    ScaleEncoding::Digits0To9 => (0, 9, 1),
                    ScaleEncoding::Digits1To10 => (1, 10, 0),
                    _ => (1, 5, 0),
                };
                (lo..=hi).contains(&v).then_some(v + shift)
            }),
        };
        if let Some(r) = found {
            return Ok(r);
        }
    }
    Err(RaterError::NoParse {
        raw: raw_text.to_string(),
    })
}

fn parse_small_int(token: &str) -> Option<u8> {
    if token.is_empty() || token.len() > 2 || !token.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    token.parse().ok()
}

/// Deterministic persona rule on the canonical scale `[lo, hi]`:
///
/// * base: rounded vote average
/// * genre term: +2 liked only, -4 disliked only, -1 both, 0 neither
/// * history term: rounded (mean retrieved rating - base), clamped to ±2
/// * clamp to the scale, then `always_high` floors at `hi - 1` and
///   `always_low` caps at `lo + 1`
pub fn rate_synthetic(
    user: &UserRecord,
    item: &ItemRecord,
    retrieved: &[RetrievedItem<'_>],
) -> Result<u8, RaterError> {
    if let Some(r) = retrieved.iter().find(|r| r.item.domain != item.domain) {
        return Err(RaterError::CrossDomain(
            item.domain.as_str(),
            r.item.domain.as_str(),
        ));
    }
    let scale = item.scale();
    let base = math::round(item.vote_average) as i32;
    let liked = item
        .genres
        .iter()
        .any(|g| contains_genre(&user.liked_genres, g));
    let disliked = item
        .genres
        .iter()
        .any(|g| contains_genre(&user.disliked_genres, g));
    let genre_term = match (liked, disliked) {
        (true, false) => 2,
        (false, true) => -4,
        (true, true) => -1,
        (false, false) => 0,
    };
    let history_term = if retrieved.is_empty() {
        0
    } else {
        let mean =
            retrieved.iter().map(|r| f64::from(r.rating)).sum::<f64>() / retrieved.len() as f64;
        (math::round(mean - f64::from(base)) as i32).clamp(-2, 2)
    };
    let rating = scale.clamp(base + genre_term + history_term);
    Ok(match user.rating_bias {
        RatingBias::None => rating,
        RatingBias::AlwaysHigh => rating.max(scale.max - 1),
        RatingBias::AlwaysLow => rating.min(scale.min + 1),
    })
}

/// Offline rater backed by [`rate_synthetic`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticRater;

impl Rater for SyntheticRater {
    fn rate(&self, request: &RatingRequest<'_>) -> Result<RatingOutcome, RaterError> {
        let rating = rate_synthetic(request.user, request.item, request.retrieved)?;
        Ok(RatingOutcome {
            raw_text: present_scale_value(ScaleValue::Rating(rating), request.encoding),
            rating,
        })
    }

    fn describe(&self, request: &DescriptionRequest<'_>) -> Result<String, RaterError> {
        Ok(template_description(request.seed, request.domain))
    }
}

fn join_or(items: &[String], empty: &str) -> String {
    match items.len() {
        0 => empty.to_string(),
        1 => items[0].clone(),
        n => format!("{} and {}", items[..n - 1].join(", "), items[n - 1]),
    }
}

/// The synthetic rater's description: hobby, job and genre preferences in
/// one templated paragraph.
pub fn template_description(seed: &UserSeed, domain: Domain) -> String {
    let pronoun = seed.gender.pronoun();
    let kind = match domain {
        Domain::Movie => "movies",
        Domain::Book => "books",
    };
    let article = |noun: &str| {
        if noun.starts_with(['a', 'e', 'i', 'o', 'u']) {
            "an"
        } else {
            "a"
        }
    };
    let job = match seed.job.as_str() {
        "retired" => "retired".to_string(),
        "student" => "a student".to_string(),
        other => format!("working as {} {other}", article(other)),
    };
    let mut s = format!(
        "{pronoun} is {job} and spends free time on {hobby}.",
        hobby = seed.hobby
    );
    let liked: Vec<String> = seed.liked_genres.clone();
    let disliked: Vec<String> = seed.disliked_genres.clone();
    if liked.is_empty() && disliked.is_empty() {
        s.push_str(&format!(
            " {} has no strong genre preferences when it comes to {kind}.",
            capitalize(pronoun)
        ));
    } else {
        if !liked.is_empty() {
            s.push_str(&format!(
                " {} enjoys {} {kind}",
                capitalize(pronoun),
                join_or(&liked, "")
            ));
            if disliked.is_empty() {
                s.push('.');
            }
        }
        if !disliked.is_empty() {
            if liked.is_empty() {
                s.push_str(&format!(" {}", capitalize(pronoun)));
            } else {
                s.push_str(" but");
            }
            s.push_str(&format!(" dislikes {} {kind}.", join_or(&disliked, "")));
        }
    }
    s
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
