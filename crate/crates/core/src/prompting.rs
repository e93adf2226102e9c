//! Rating-query rendering.
//!
//! Templates are plain text data files (see `templates/`), one set per
//! domain, named `<domain>_<part>.txt`:
//!
//! | part              | slots |
//! | ----------------- | ----- |
//! | `query`           | `name age noun description history title year overview genre_lines people average scale scale_low scale_high ordinal` |
//! | `history`         | `name pronoun history_scale entries` |
//! | `people_one`      | `people` |
//! | `people_many`     | `count people` |
//! | `answer_prefix`   | `name pronoun` |
//! | `system_custom`   | none |
//! | `shot_1`, `shot_2`| none; `Q: <question>\nA: <answer>` |
//!
//! One trailing newline is stripped from every file.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ItemRecord, UserRecord};
use crate::retrieval::RetrievedItem;
use crate::scale::Domain;
use crate::template::{self, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("scale encoding {encoding} cannot be used with {domain} items")]
    EncodingDomain {
        encoding: &'static str,
        domain: &'static str,
    },
    #[error("n_shot must be 0, 1 or 2 (got {0})")]
    NShot(u8),
    #[error("item {item_id} is a {found}, prompt is configured for {expected}")]
    CrossDomain {
        item_id: u32,
        found: &'static str,
        expected: &'static str,
    },
    #[error("user {0} has an empty description")]
    EmptyDescription(u32),
    #[error("view count must be at least 1")]
    ZeroView,
    #[error("exemplar {0} is not in `Q: ...\\nA: ...` form")]
    BadExemplar(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// How ratings are presented to and read back from the rater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScaleEncoding {
    #[serde(rename = "digits_0_9")]
    Digits0To9,
    #[serde(rename = "digits_1_10")]
    Digits1To10,
    #[serde(rename = "words_one_ten")]
    WordsOneTen,
    #[serde(rename = "digits_1_5")]
    Digits1To5,
}

impl ScaleEncoding {
    pub const ALL: [ScaleEncoding; 4] = [
        ScaleEncoding::Digits0To9,
        ScaleEncoding::Digits1To10,
        ScaleEncoding::WordsOneTen,
        ScaleEncoding::Digits1To5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScaleEncoding::Digits0To9 => "digits_0_9",
            ScaleEncoding::Digits1To10 => "digits_1_10",
            ScaleEncoding::WordsOneTen => "words_one_ten",
            ScaleEncoding::Digits1To5 => "digits_1_5",
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            ScaleEncoding::Digits1To5 => Domain::Book,
            _ => Domain::Movie,
        }
    }

    /// `(range phrase, low label, high label)` as shown in the question.
    fn phrases(self) -> (&'static str, &'static str, &'static str) {
        match self {
            ScaleEncoding::Digits0To9 => ("0 to 9", "0", "9"),
            ScaleEncoding::Digits1To10 => ("1 to 10", "1", "10"),
            ScaleEncoding::WordsOneTen => ("one to ten", "one", "ten"),
            ScaleEncoding::Digits1To5 => ("1 to 5", "1", "5"),
        }
    }

    /// Past ratings stay numeric under the word encoding.
    fn history_phrase(self) -> &'static str {
        match self {
            ScaleEncoding::Digits0To9 => "0 to 9",
            ScaleEncoding::Digits1To10 | ScaleEncoding::WordsOneTen => "1 to 10",
            ScaleEncoding::Digits1To5 => "1 to 5",
        }
    }

    /// Canonical rating as a history entry.
    fn history_rating(self, rating: u8) -> String {
        match self {
            ScaleEncoding::Digits0To9 => (rating - 1).to_string(),
            _ => rating.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemPromptKind {
    /// Empty system message; the model's own default applies.
    Default,
    #[default]
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptConfig {
    pub scale_encoding: ScaleEncoding,
    pub n_shot: u8,
    pub system_prompt: SystemPromptKind,
    pub domain: Domain,
}

impl PromptConfig {
    pub fn movie() -> Self {
        PromptConfig {
            scale_encoding: ScaleEncoding::Digits0To9,
            n_shot: 2,
            system_prompt: SystemPromptKind::Custom,
            domain: Domain::Movie,
        }
    }

    pub fn book() -> Self {
        PromptConfig {
            scale_encoding: ScaleEncoding::Digits1To5,
            n_shot: 2,
            system_prompt: SystemPromptKind::Custom,
            domain: Domain::Book,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.scale_encoding.domain() != self.domain {
            return Err(PromptError::EncodingDomain {
                encoding: self.scale_encoding.as_str(),
                domain: self.domain.as_str(),
            });
        }
        if self.n_shot > 2 {
            return Err(PromptError::NShot(self.n_shot));
        }
        Ok(())
    }
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self::movie()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub question: String,
    pub answer: String,
}

/// Everything sent to the rater for one query. `query` is the question text
/// without the `Q: ` marker; `answer_prefix` is the start of the answer that
/// the rater continues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub shots: Vec<Shot>,
    pub query: String,
    pub answer_prefix: String,
}

impl RenderedPrompt {
    /// Plain-text transcript in `Q:`/`A:` form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.system.is_empty() {
            out.push_str(&self.system);
            out.push_str("\n\n");
        }
        for shot in &self.shots {
            out.push_str("Q: ");
            out.push_str(&shot.question);
            out.push_str("\nA: ");
            out.push_str(&shot.answer);
            out.push_str("\n\n");
        }
        out.push_str("Q: ");
        out.push_str(&self.query);
        out.push_str("\n\nA: ");
        out.push_str(&self.answer_prefix);
        out
    }

    /// Stable 64-bit FNV-1a id of [`RenderedPrompt::to_text`].
    pub fn id(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_text().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// Template set for one domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub domain: Domain,
    pub query: String,
    pub history: String,
    pub people_one: String,
    pub people_many: String,
    pub answer_prefix: String,
    pub system_custom: String,
    pub shots: [String; 2],
}

macro_rules! builtin {
    ($file:literal) => {
        include_str!(concat!("../templates/", $file))
    };
}

pub const TEMPLATE_PARTS: [&str; 8] = [
    "query",
    "history",
    "people_one",
    "people_many",
    "answer_prefix",
    "system_custom",
    "shot_1",
    "shot_2",
];

fn builtin_part(domain: Domain, part: &str) -> &'static str {
    match (domain, part) {
        (Domain::Movie, "query") => builtin!("movie_query.txt"),
        (Domain::Movie, "history") => builtin!("movie_history.txt"),
        (Domain::Movie, "people_one") => builtin!("movie_people_one.txt"),
        (Domain::Movie, "people_many") => builtin!("movie_people_many.txt"),
        (Domain::Movie, "answer_prefix") => builtin!("movie_answer_prefix.txt"),
        (Domain::Movie, "system_custom") => builtin!("movie_system_custom.txt"),
        (Domain::Movie, "shot_1") => builtin!("movie_shot_1.txt"),
        (Domain::Movie, "shot_2") => builtin!("movie_shot_2.txt"),
        (Domain::Book, "query") => builtin!("book_query.txt"),
        (Domain::Book, "history") => builtin!("book_history.txt"),
        (Domain::Book, "people_one") => builtin!("book_people_one.txt"),
        (Domain::Book, "people_many") => builtin!("book_people_many.txt"),
        (Domain::Book, "answer_prefix") => builtin!("book_answer_prefix.txt"),
        (Domain::Book, "system_custom") => builtin!("book_system_custom.txt"),
        (Domain::Book, "shot_1") => builtin!("book_shot_1.txt"),
        (Domain::Book, "shot_2") => builtin!("book_shot_2.txt"),
        _ => "",
    }
}

/// Listing-1 style request for a free-text user description.
pub const USER_DESCRIPTION_TEMPLATE: &str = builtin!("user_description.txt");

pub(crate) fn strip_file_newline(s: &str) -> &str {
    s.strip_suffix('\n').unwrap_or(s)
}

impl PromptTemplates {
    pub fn builtin(domain: Domain) -> Self {
        Self::from_lookup(domain, |_| None)
    }

    /// Builds a template set from `lookup(part)`, falling back to the built-in
    /// text for parts it does not provide.
    pub fn from_lookup(domain: Domain, lookup: impl Fn(&str) -> Option<String>) -> Self {
        let part = |name: &str| -> String {
            match lookup(name) {
                Some(s) => strip_file_newline(&s).to_string(),
                None => strip_file_newline(builtin_part(domain, name)).to_string(),
            }
        };
        PromptTemplates {
            domain,
            query: part("query"),
            history: part("history"),
            people_one: part("people_one"),
            people_many: part("people_many"),
            answer_prefix: part("answer_prefix"),
            system_custom: part("system_custom"),
            shots: [part("shot_1"), part("shot_2")],
        }
    }

    /// Exemplars for `config.n_shot`, high-rating example first.
    pub fn render_shots(&self, config: &PromptConfig) -> Result<Vec<Shot>, PromptError> {
        config.validate()?;
        self.shots
            .iter()
            .take(usize::from(config.n_shot))
            .map(|s| parse_shot(s))
            .collect()
    }

    pub fn render_query(
        &self,
        config: &PromptConfig,
        user: &UserRecord,
        retrieved: &[RetrievedItem<'_>],
        item: &ItemRecord,
        n_view: u32,
    ) -> Result<RenderedPrompt, PromptError> {
        config.validate()?;
        let check = |it: &ItemRecord| {
            if it.domain == config.domain {
                Ok(())
            } else {
                Err(PromptError::CrossDomain {
                    item_id: it.item_id,
                    found: it.domain.as_str(),
                    expected: config.domain.as_str(),
                })
            }
        };
        check(item)?;
        for r in retrieved {
            check(r.item)?;
        }
        if user.description.trim().is_empty() {
            return Err(PromptError::EmptyDescription(user.user_id));
        }
        if n_view == 0 {
            return Err(PromptError::ZeroView);
        }
        let enc = config.scale_encoding;
        let pronoun = user.gender.pronoun();
        let age = user.age.to_string();

        let history = if retrieved.is_empty() {
            String::new()
        } else {
            let entries = retrieved
                .iter()
                .map(|r| format!("\"{}\" ({})", r.item.title, enc.history_rating(r.rating)))
                .collect::<Vec<_>>()
                .join(", ");
            let mut h = template::fill(
                &self.history,
                &[
                    ("name", &user.name),
                    ("pronoun", pronoun),
                    ("history_scale", enc.history_phrase()),
                    ("entries", &entries),
                ],
            )?;
            h.push('\n');
            h
        };

        let people = item.people();
        let people_sentence = match people.len() {
            0 => String::new(),
            n => {
                let listed = match item.domain {
                    Domain::Movie => item
                        .actors
                        .iter()
                        .map(|a| format!("{} ({})", a.name, a.gender.as_str()))
                        .collect::<Vec<_>>()
                        .join(", "),
                    Domain::Book => people.join(", "),
                };
                let count = n.to_string();
                let tpl = if n == 1 {
                    &self.people_one
                } else {
                    &self.people_many
                };
                template::fill(tpl, &[("people", &listed), ("count", &count)])?
            }
        };

        let genre_lines = item
            .genres
            .iter()
            .map(|g| format!("-{g}"))
            .collect::<Vec<_>>()
            .join("\n");
        let (scale, low, high) = enc.phrases();
        let average = present_scale_value(ScaleValue::Average(item.vote_average), enc);
        let year = item.release_date.year.to_string();
        let ordinal = ordinal(n_view);

        let query = template::fill(
            &self.query,
            &[
                ("name", &user.name),
                ("age", &age),
                ("noun", user.gender.noun(user.age)),
                ("description", &user.description),
                ("history", &history),
                ("title", &item.title),
                ("year", &year),
                ("overview", &item.overview),
                ("genre_lines", &genre_lines),
                ("people", &people_sentence),
                ("average", &average),
                ("scale", scale),
                ("scale_low", low),
                ("scale_high", high),
                ("ordinal", &ordinal),
            ],
        )?;
        let answer_prefix = template::fill(
            &self.answer_prefix,
            &[("name", &user.name), ("pronoun", pronoun)],
        )?;
        let system = match config.system_prompt {
            SystemPromptKind::Default => String::new(),
            SystemPromptKind::Custom => self.system_custom.clone(),
        };
        Ok(RenderedPrompt {
            system,
            shots: self.render_shots(config)?,
            query,
            answer_prefix,
        })
    }
}

fn parse_shot(text: &str) -> Result<Shot, PromptError> {
    let bad = || PromptError::BadExemplar(text.chars().take(40).collect());
    let body = text.strip_prefix("Q: ").ok_or_else(bad)?;
    let (question, answer) = body.split_once("\nA: ").ok_or_else(bad)?;
    Ok(Shot {
        question: question.to_string(),
        answer: answer.to_string(),
    })
}

/// Renders with the built-in templates of `config.domain`.
pub fn render_query(
    config: &PromptConfig,
    user: &UserRecord,
    retrieved: &[RetrievedItem<'_>],
    item: &ItemRecord,
    n_view: u32,
) -> Result<RenderedPrompt, PromptError> {
    PromptTemplates::builtin(config.domain).render_query(config, user, retrieved, item, n_view)
}

pub fn render_shots(config: &PromptConfig) -> Result<Vec<Shot>, PromptError> {
    PromptTemplates::builtin(config.domain).render_shots(config)
}

/// English ordinal: 1st, 2nd, 3rd, 4th, 11th, 12th, 13th, 21st, ...
pub fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// A value on the canonical scale: an integer rating or a vote average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleValue {
    Rating(u8),
    Average(f64),
}

pub const NUMBER_WORDS: [&str; 10] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

/// Canonical value as shown under `enc`. Averages keep one decimal and stay
/// numeric under the word encoding.
pub fn present_scale_value(value: ScaleValue, enc: ScaleEncoding) -> String {
    match value {
        ScaleValue::Rating(r) => match enc {
            ScaleEncoding::Digits0To9 => r.saturating_sub(1).to_string(),
            ScaleEncoding::WordsOneTen if (1..=10).contains(&r) => {
                NUMBER_WORDS[usize::from(r - 1)].to_string()
            }
            _ => r.to_string(),
        },
        ScaleValue::Average(v) => match enc {
            ScaleEncoding::Digits0To9 => format!("{:.1}", v - 1.0),
            _ => format!("{v:.1}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::fixtures::{movie, user};

    #[test]
    fn ordinals() {
        let cases = [
            (1, "1st"),
            (2, "2nd"),
            (3, "3rd"),
            (4, "4th"),
            (11, "11th"),
            (12, "12th"),
            (13, "13th"),
            (21, "21st"),
            (22, "22nd"),
            (111, "111th"),
            (101, "101st"),
        ];
        for (n, s) in cases {
            assert_eq!(ordinal(n), s);
        }
    }

    #[test]
    fn scale_values() {
        use ScaleEncoding::*;
        assert_eq!(
            present_scale_value(ScaleValue::Average(6.6), Digits0To9),
            "5.6"
        );
        assert_eq!(
            present_scale_value(ScaleValue::Average(6.6), WordsOneTen),
            "6.6"
        );
        assert_eq!(
            present_scale_value(ScaleValue::Rating(8), WordsOneTen),
            "eight"
        );
        assert_eq!(present_scale_value(ScaleValue::Rating(8), Digits1To10), "8");
        assert_eq!(present_scale_value(ScaleValue::Rating(8), Digits0To9), "7");
        assert_eq!(present_scale_value(ScaleValue::Rating(4), Digits1To5), "4");
    }

    #[test]
    fn shots_by_count() {
        let mut cfg = PromptConfig::movie();
        cfg.n_shot = 0;
        assert!(render_shots(&cfg).unwrap().is_empty());
        cfg.n_shot = 2;
        let shots = render_shots(&cfg).unwrap();
        assert!(shots[0].question.starts_with("Alex is a 12 years old boy"));
        assert!(shots[1]
            .question
            .starts_with("Nicholas is a 26 years old man"));
        let shots = render_shots(&PromptConfig::book()).unwrap();
        assert!(shots[0].question.starts_with("Emilia is a 20 years old"));
        assert!(shots[1].question.starts_with("Mary is a 12 years old girl"));
        cfg.n_shot = 1;
        assert_eq!(render_shots(&cfg).unwrap().len(), 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PromptConfig::movie();
        cfg.scale_encoding = ScaleEncoding::Digits1To5;
        assert!(matches!(
            cfg.validate(),
            Err(PromptError::EncodingDomain { .. })
        ));
        let mut cfg = PromptConfig::book();
        cfg.scale_encoding = ScaleEncoding::WordsOneTen;
        assert!(cfg.validate().is_err());
        let mut cfg = PromptConfig::movie();
        cfg.n_shot = 3;
        assert_eq!(cfg.validate(), Err(PromptError::NShot(3)));
    }

    #[test]
    fn empty_history_drops_sentence() {
        let u = user(0);
        let it = movie(1, &["drama"], 6.6);
        let p = render_query(&PromptConfig::movie(), &u, &[], &it, 1).unwrap();
        assert!(!p.query.contains("has previously"));
        assert!(p
            .query
            .starts_with("User0 is a 30 years old woman, she is a tester.\nConsider"));
    }

    #[test]
    fn render_errors() {
        let mut u = user(0);
        let it = movie(1, &["drama"], 6.6);
        assert_eq!(
            render_query(&PromptConfig::movie(), &u, &[], &it, 0),
            Err(PromptError::ZeroView)
        );
        let mut book = it.clone();
        book.domain = Domain::Book;
        book.vote_average = 3.0;
        let r = RetrievedItem {
            item: &book,
            rating: 3,
            step: 1,
        };
        assert!(matches!(
            render_query(&PromptConfig::movie(), &u, &[r], &it, 1),
            Err(PromptError::CrossDomain { item_id: 1, .. })
        ));
        u.description = "  ".into();
        assert_eq!(
            render_query(&PromptConfig::movie(), &u, &[], &it, 1),
            Err(PromptError::EmptyDescription(0))
        );
    }

    #[test]
    fn system_prompt_variants() {
        let u = user(0);
        let it = movie(1, &["drama"], 6.6);
        let mut cfg = PromptConfig::movie();
        cfg.system_prompt = SystemPromptKind::Default;
        assert_eq!(render_query(&cfg, &u, &[], &it, 1).unwrap().system, "");
        cfg.system_prompt = SystemPromptKind::Custom;
        assert!(render_query(&cfg, &u, &[], &it, 1)
            .unwrap()
            .system
            .starts_with("You are a highly sophisticated movie rating assistant"));
    }

    #[test]
    fn builtin_templates_only_use_documented_slots() {
        for domain in [Domain::Movie, Domain::Book] {
            let t = PromptTemplates::builtin(domain);
            for s in template::slots(&t.query) {
                assert!(
                    [
                        "name",
                        "age",
                        "noun",
                        "description",
                        "history",
                        "title",
                        "year",
                        "overview",
                        "genre_lines",
                        "people",
                        "average",
                        "scale",
                        "scale_low",
                        "scale_high",
                        "ordinal"
                    ]
                    .contains(&s),
                    "{s}"
                );
            }
            assert!(t.answer_prefix.ends_with("rating of "));
        }
    }
}
