//! Synthetic user profiles: sampled structured attributes plus a free-text
//! description obtained from a rater.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Gender, RatingBias, UserRecord, MAX_AGE, MIN_AGE};
use crate::prompting::USER_DESCRIPTION_TEMPLATE;
use crate::rater::{DescriptionRequest, Rater, RaterError};
use crate::scale::Domain;
use crate::template;

pub const ADULT_AGE: u8 = 18;
pub const RETIREMENT_AGE: u8 = 66;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TablesError {
    #[error("age weights sum to {0}, expected 1")]
    AgeSum(f64),
    #[error("age {0} outside 4..=75")]
    AgeRange(u8),
    #[error("{0} list is empty")]
    EmptyList(&'static str),
    #[error("genre {genre:?}: probability {value} outside [0, 1]")]
    Probability { genre: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenrePreference {
    pub genre: String,
    pub like: f64,
    pub dislike: f64,
}

/// Distributions and lists user profiles are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingTables {
    /// `(age, probability)` pairs.
    pub age_distribution: Vec<(u8, f64)>,
    pub child_hobbies: Vec<String>,
    pub adult_hobbies: Vec<String>,
    pub jobs: Vec<String>,
    pub genres: Vec<GenrePreference>,
    pub female_names: Vec<String>,
    pub male_names: Vec<String>,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Genres used by the bundled fixtures and the default tables.
pub const DEFAULT_GENRES: [&str; 8] = [
    "action",
    "animation",
    "comedy",
    "documentary",
    "family",
    "fantasy",
    "horror",
    "romance",
];

impl Default for SamplingTables {
    /// Uniform tables: every age in 4..=75 equally likely, each genre liked
    /// and disliked with probability 0.25.
    fn default() -> Self {
        let n = f64::from(MAX_AGE - MIN_AGE + 1);
        SamplingTables {
            age_distribution: (MIN_AGE..=MAX_AGE).map(|a| (a, 1.0 / n)).collect(),
            child_hobbies: strings(&[
                "drawing",
                "building LEGO models",
                "playing soccer",
                "collecting trading cards",
                "video games",
                "riding a bike",
                "swimming",
                "reading comics",
                "playing the piano",
                "stargazing",
            ]),
            adult_hobbies: strings(&[
                "chess",
                "compact discs",
                "hiking",
                "gardening",
                "photography",
                "baking",
                "rock climbing",
                "birdwatching",
                "woodworking",
                "knitting",
                "running",
                "painting",
                "fishing",
                "board games",
                "cooking",
                "yoga",
                "astronomy",
                "cycling",
                "pottery",
                "playing the guitar",
            ]),
            jobs: strings(&[
                "teacher",
                "detective",
                "nurse",
                "software engineer",
                "architect",
                "electrician",
                "accountant",
                "chef",
                "journalist",
                "pharmacist",
                "carpenter",
                "librarian",
                "lawyer",
                "graphic designer",
                "veterinarian",
                "firefighter",
                "wilderness guide",
                "mechanic",
                "biologist",
                "translator",
            ]),
            genres: DEFAULT_GENRES
                .iter()
                .map(|g| GenrePreference {
                    genre: g.to_string(),
                    like: 0.25,
                    dislike: 0.25,
                })
                .collect(),
            female_names: strings(&[
                "Emily", "Ava", "Sophia", "Mia", "Olivia", "Grace", "Hannah", "Chloe", "Lucy",
                "Nora", "Isabel", "Clara",
            ]),
            male_names: strings(&[
                "Oliver", "Samuel", "Nicholas", "Liam", "Noah", "Lucas", "Henry", "Daniel",
                "Ethan", "Jacob", "Owen", "Leo",
            ]),
        }
    }
}

impl SamplingTables {
    pub fn validate(&self) -> Result<(), TablesError> {
        let sum: f64 = self.age_distribution.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 || self.age_distribution.iter().any(|(_, p)| *p < 0.0) {
            return Err(TablesError::AgeSum(sum));
        }
        if let Some((age, _)) = self
            .age_distribution
            .iter()
            .find(|(a, _)| !(MIN_AGE..=MAX_AGE).contains(a))
        {
            return Err(TablesError::AgeRange(*age));
        }
        for (name, list) in [
            ("child_hobbies", &self.child_hobbies),
            ("adult_hobbies", &self.adult_hobbies),
            ("jobs", &self.jobs),
            ("female_names", &self.female_names),
            ("male_names", &self.male_names),
        ] {
            if list.is_empty() {
                return Err(TablesError::EmptyList(name));
            }
        }
        for g in &self.genres {
            for value in [g.like, g.dislike] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(TablesError::Probability {
                        genre: g.genre.clone(),
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Sampled attributes of a user before the description is written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSeed {
    pub age: u8,
    pub gender: Gender,
    pub hobby: String,
    pub job: String,
    pub liked_genres: Vec<String>,
    pub disliked_genres: Vec<String>,
}

/// `tables` must have passed [`SamplingTables::validate`].
pub fn sample_profile<R: Rng + ?Sized>(rng: &mut R, tables: &SamplingTables) -> UserSeed {
    let weights = WeightedIndex::new(tables.age_distribution.iter().map(|(_, p)| *p))
        .expect("validated age distribution");
    let age = tables.age_distribution[weights.sample(rng)].0;
    sample_profile_with_age(rng, tables, age)
}

pub fn sample_profile_with_age<R: Rng + ?Sized>(
    rng: &mut R,
    tables: &SamplingTables,
    age: u8,
) -> UserSeed {
    let gender = if rng.random_bool(0.5) {
        Gender::F
    } else {
        Gender::M
    };
    let hobbies = if age < ADULT_AGE {
        &tables.child_hobbies
    } else {
        &tables.adult_hobbies
    };
    let hobby = hobbies.choose(rng).expect("nonempty hobbies").clone();
    let job = if age < ADULT_AGE {
        "student".to_string()
    } else if age >= RETIREMENT_AGE {
        "retired".to_string()
    } else {
        tables.jobs.choose(rng).expect("nonempty jobs").clone()
    };
    let (liked_genres, disliked_genres) = sample_genre_preferences(rng, tables);
    UserSeed {
        age,
        gender,
        hobby,
        job,
        liked_genres,
        disliked_genres,
    }
}

/// Each genre is liked and disliked independently with its table
/// probabilities; a genre drawn as both stays liked only.
pub fn sample_genre_preferences<R: Rng + ?Sized>(
    rng: &mut R,
    tables: &SamplingTables,
) -> (Vec<String>, Vec<String>) {
    let mut liked = Vec::new();
    let mut disliked = Vec::new();
    for g in &tables.genres {
        let like = rng.random_bool(g.like);
        let dislike = rng.random_bool(g.dislike);
        if like {
            liked.push(g.genre.clone());
        } else if dislike {
            disliked.push(g.genre.clone());
        }
    }
    (liked, disliked)
}

/// The description request text for `seed`, ending in `"<pronoun> is "`.
pub fn description_prompt(seed: &UserSeed, name: &str, domain: Domain) -> String {
    let join = |xs: &[String]| {
        if xs.is_empty() {
            "none".to_string()
        } else {
            xs.join(", ")
        }
    };
    let age = seed.age.to_string();
    let liked = join(&seed.liked_genres);
    let disliked = join(&seed.disliked_genres);
    let preference_kind = match domain {
        Domain::Movie => "cinematic",
        Domain::Book => "reading",
    };
    template::fill(
        crate::prompting::strip_file_newline(USER_DESCRIPTION_TEMPLATE),
        &[
            ("preference_kind", preference_kind),
            ("name", name),
            ("age", &age),
            ("gender", seed.gender.as_str()),
            ("hobby", &seed.hobby),
            ("job", &seed.job),
            ("liked", &liked),
            ("disliked", &disliked),
            ("pronoun", seed.gender.pronoun()),
        ],
    )
    .expect("built-in description template binds all slots")
}

pub fn generate_description<R: Rater + ?Sized>(
    rater: &R,
    seed: &UserSeed,
    name: &str,
    domain: Domain,
) -> Result<String, RaterError> {
    let prompt = description_prompt(seed, name, domain);
    rater.describe(&DescriptionRequest {
        seed,
        name,
        domain,
        prompt: &prompt,
    })
}

/// Samples `count` users with ids starting at `first_id`.
pub fn generate_users<G: Rng + ?Sized, R: Rater + ?Sized>(
    rng: &mut G,
    rater: &R,
    tables: &SamplingTables,
    count: usize,
    first_id: u32,
    domain: Domain,
) -> Result<Vec<UserRecord>, RaterError> {
    tables
        .validate()
        .map_err(|e| RaterError::Config(e.to_string()))?;
    let mut users = Vec::with_capacity(count);
    for i in 0..count {
        let seed = sample_profile(rng, tables);
        let names = match seed.gender {
            Gender::F => &tables.female_names,
            Gender::M => &tables.male_names,
        };
        let name = names.choose(rng).expect("nonempty names").clone();
        let description = generate_description(rater, &seed, &name, domain)?;
        users.push(UserRecord {
            user_id: first_id + i as u32,
            name,
            age: seed.age,
            gender: seed.gender,
            description,
            liked_genres: seed.liked_genres,
            disliked_genres: seed.disliked_genres,
            hobby: seed.hobby,
            job: seed.job,
            rating_bias: RatingBias::None,
        });
    }
    Ok(users)
}
