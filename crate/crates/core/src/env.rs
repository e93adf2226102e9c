//! Episodic reset/step loop: the agent recommends an item, the rater scores
//! it, the perturbed rating is stored and the shaped rating is returned.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, Memory};
use crate::postprocess::{self, PostprocessConfig, PostprocessError};
use crate::prompting::{PromptConfig, PromptError, PromptTemplates, RenderedPrompt};
use crate::rater::{Rater, RaterError, RaterKind, RatingRequest};
use crate::retrieval::{self, EmbeddingTable, RetrievalError, RetrievalStrategy};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("catalog has no users")]
    EmptyCatalog,
    #[error("step called before reset or after the episode ended")]
    NotReset,
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error("rater failed for user {user_id}, item {item_id}: {source}")]
    Rater {
        user_id: u32,
        item_id: u32,
        #[source]
        source: RaterError,
    },
}

fn default_horizon() -> u32 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(default)]
    pub retrieval: RetrievalStrategy,
    #[serde(default)]
    pub prompt: PromptConfig,
    #[serde(default)]
    pub postprocess: PostprocessConfig,
    #[serde(default)]
    pub rater: RaterKind,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default)]
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            retrieval: RetrievalStrategy::default(),
            prompt: PromptConfig::default(),
            postprocess: PostprocessConfig::default(),
            rater: RaterKind::default(),
            horizon: default_horizon(),
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.horizon < 1 {
            return Err(EnvError::Config("horizon must be at least 1".into()));
        }
        self.prompt.validate()?;
        self.postprocess.validate()?;
        self.rater
            .validate()
            .map_err(|e| EnvError::Config(alloc::format!("{e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub user_index: usize,
    /// Latest stored rating per item divided by the scale maximum, 0 if unseen.
    pub ratings_vector: Vec<f64>,
}

/// Diagnostics of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step: u64,
    pub user_id: u32,
    pub item_id: u32,
    pub raw_text: String,
    pub raw: u8,
    pub perturbed: u8,
    pub shaped: u8,
    /// Prior interactions of this user with this item.
    pub n_ui: usize,
    pub delta_t: Option<u64>,
    pub prompt_id: u64,
    pub prompt: RenderedPrompt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub observation: Observation,
    pub terminated: bool,
    pub info: StepInfo,
}

/// Rater output for one query before anything is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub prompt: RenderedPrompt,
    pub raw_text: String,
    pub raw: u8,
    pub perturbed: u8,
}

/// Shared read-only pieces of the rating pipeline.
#[derive(Debug, Clone, Copy)]
pub struct Pipeline<'a> {
    pub config: &'a EnvConfig,
    pub templates: &'a PromptTemplates,
    pub embeddings: Option<&'a EmbeddingTable>,
}

impl Pipeline<'_> {
    /// Retrieve, render, rate and perturb without touching `memory`.
    pub fn query<R: Rater + ?Sized, G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        rater: &R,
        memory: &Memory,
        user_id: u32,
        item_id: u32,
        n_view: u32,
    ) -> Result<QueryOutcome, EnvError> {
        let user = memory.user(user_id)?;
        let item = memory.item(item_id)?;
        let retrieved = retrieval::retrieve(
            &self.config.retrieval,
            memory,
            self.embeddings,
            user_id,
            item,
        )?;
        let prompt =
            self.templates
                .render_query(&self.config.prompt, user, &retrieved, item, n_view)?;
        let outcome = rater
            .rate(&RatingRequest {
                prompt: &prompt,
                encoding: self.config.prompt.scale_encoding,
                user,
                item,
                retrieved: &retrieved,
            })
            .map_err(|source| EnvError::Rater {
                user_id,
                item_id,
                source,
            })?;
        let perturbed = postprocess::perturb(
            rng,
            outcome.rating,
            &self.config.postprocess.perturb,
            item.scale(),
        );
        Ok(QueryOutcome {
            prompt,
            raw_text: outcome.raw_text,
            raw: outcome.rating,
            perturbed,
        })
    }
}

pub fn encode_observation(memory: &Memory, user_id: u32) -> Result<Observation, CatalogError> {
    let user_index = memory.user_index(user_id)?;
    let mut ratings_vector = vec![0.0; memory.items().len()];
    for rec in memory.latest_per_item(user_id) {
        let idx = memory.item_index(rec.item_id)?;
        let max = memory.items()[idx].scale().max;
        ratings_vector[idx] = f64::from(rec.stored_rating) / f64::from(max);
    }
    Ok(Observation {
        user_index,
        ratings_vector,
    })
}

#[derive(Debug, Clone)]
struct Episode {
    user_id: u32,
    steps: u32,
    observation: Observation,
    seen: Vec<bool>,
}

pub struct SuberEnv<R> {
    config: EnvConfig,
    memory: Memory,
    templates: PromptTemplates,
    embeddings: Option<EmbeddingTable>,
    rater: R,
    rng: ChaCha8Rng,
    next_step: u64,
    episode: Option<Episode>,
}

impl<R: Rater> SuberEnv<R> {
    pub fn new(
        config: EnvConfig,
        memory: Memory,
        templates: PromptTemplates,
        embeddings: Option<EmbeddingTable>,
        rater: R,
    ) -> Result<Self, EnvError> {
        config.validate()?;
        if memory.users().is_empty() {
            return Err(EnvError::EmptyCatalog);
        }
        if let Some(domain) = memory.domain() {
            if domain != config.prompt.domain || templates.domain != domain {
                return Err(EnvError::Config(alloc::format!(
                    "catalog domain {} does not match prompt domain {}",
                    domain.as_str(),
                    config.prompt.domain.as_str()
                )));
            }
        } else {
            return Err(EnvError::Config("catalog has no items".into()));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let next_step = memory.last_step().map_or(0, |s| s + 1);
        Ok(SuberEnv {
            config,
            memory,
            templates,
            embeddings,
            rater,
            rng,
            next_step,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    pub fn into_memory(self) -> Memory {
        self.memory
    }

    pub fn rater(&self) -> &R {
        &self.rater
    }

    pub fn pipeline(&self) -> Pipeline<'_> {
        Pipeline {
            config: &self.config,
            templates: &self.templates,
            embeddings: self.embeddings.as_ref(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.memory.users().len()
    }

    pub fn n_items(&self) -> usize {
        self.memory.items().len()
    }

    /// User of the running episode.
    pub fn current_user(&self) -> Option<u32> {
        self.episode.as_ref().map(|e| e.user_id)
    }

    /// Items already recommended in the running episode, by item index.
    pub fn seen_mask(&self) -> Option<&[bool]> {
        self.episode.as_ref().map(|e| e.seen.as_slice())
    }

    /// Rates `item_id` for `user_id` without storing anything.
    pub fn query_rating(
        &mut self,
        user_id: u32,
        item_id: u32,
        n_view: u32,
    ) -> Result<QueryOutcome, EnvError> {
        let pipeline = Pipeline {
            config: &self.config,
            templates: &self.templates,
            embeddings: self.embeddings.as_ref(),
        };
        pipeline.query(
            &mut self.rng,
            &self.rater,
            &self.memory,
            user_id,
            item_id,
            n_view,
        )
    }

    /// Starts an episode with a uniformly drawn user.
    pub fn reset(&mut self) -> Result<Observation, EnvError> {
        let idx = self.rng.random_range(0..self.memory.users().len());
        let user_id = self.memory.users()[idx].user_id;
        self.reset_to(user_id)
    }

    pub fn reset_to(&mut self, user_id: u32) -> Result<Observation, EnvError> {
        let observation = encode_observation(&self.memory, user_id)?;
        self.episode = Some(Episode {
            user_id,
            steps: 0,
            observation: observation.clone(),
            seen: vec![false; self.n_items()],
        });
        Ok(observation)
    }

    pub fn step(&mut self, item_id: u32) -> Result<StepResult, EnvError> {
        let Some(user_id) = self
            .episode
            .as_ref()
            .filter(|e| e.steps < self.config.horizon)
            .map(|e| e.user_id)
        else {
            return Err(EnvError::NotReset);
        };
        let item_index = self.memory.item_index(item_id)?;
        let step = self.next_step;
        let (n_ui, delta_t) = self.memory.recurrence_stats(user_id, item_id, step)?;
        let pipeline = Pipeline {
            config: &self.config,
            templates: &self.templates,
            embeddings: self.embeddings.as_ref(),
        };
        let outcome = pipeline.query(
            &mut self.rng,
            &self.rater,
            &self.memory,
            user_id,
            item_id,
            n_ui as u32 + 1,
        )?;
        self.memory
            .record_interaction(user_id, item_id, outcome.perturbed, step)?;
        let shaped = postprocess::shape(
            outcome.perturbed,
            n_ui,
            delta_t.unwrap_or(1),
            self.config.postprocess.shaping_q,
        );
        self.next_step += 1;
        let max = self.memory.items()[item_index].scale().max;
        let episode = self.episode.as_mut().expect("checked above");
        episode.steps += 1;
        episode.seen[item_index] = true;
        episode.observation.ratings_vector[item_index] =
            f64::from(outcome.perturbed) / f64::from(max);
        let terminated = episode.steps == self.config.horizon;
        let prompt_id = outcome.prompt.id();
        Ok(StepResult {
            reward: f64::from(shaped),
            observation: episode.observation.clone(),
            terminated,
            info: StepInfo {
                step,
                user_id,
                item_id,
                raw_text: outcome.raw_text,
                raw: outcome.raw,
                perturbed: outcome.perturbed,
                shaped,
                n_ui,
                delta_t,
                prompt_id,
                prompt: outcome.prompt,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::fixtures::{movie, user};
    use crate::postprocess::PerturbConfig;
    use crate::rater::{rate_synthetic, SyntheticRater};
    use crate::scale::Domain;
    use alloc::string::ToString;

    fn env(n_users: u32, q: f64) -> SuberEnv<SyntheticRater> {
        let users = (0..n_users).map(user).collect();
        let items = vec![
            movie(0, &["drama"], 6.0),
            movie(1, &["horror"], 7.0),
            movie(2, &["comedy"], 5.0),
            movie(3, &["drama", "horror"], 8.0),
        ];
        let config = EnvConfig {
            postprocess: PostprocessConfig {
                perturb: PerturbConfig::None,
                shaping_q: q,
            },
            ..Default::default()
        };
        SuberEnv::new(
            config,
            Memory::new(users, items).unwrap(),
            PromptTemplates::builtin(Domain::Movie),
            None,
            SyntheticRater,
        )
        .unwrap()
    }

    #[test]
    fn step_requires_reset() {
        let mut e = env(1, 0.7);
        assert!(matches!(e.step(0), Err(EnvError::NotReset)));
    }

    #[test]
    fn single_user_selected_and_zero_observation() {
        let mut e = env(1, 0.7);
        let obs = e.reset().unwrap();
        assert_eq!(obs.user_index, 0);
        assert!(obs.ratings_vector.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn first_reward_is_oracle_rating() {
        let mut e = env(1, 0.7);
        e.reset().unwrap();
        let r = e.step(0).unwrap();
        let m = e.memory();
        let expect = rate_synthetic(m.user(0).unwrap(), m.item(0).unwrap(), &[]).unwrap();
        assert_eq!(r.reward, f64::from(expect));
        assert_eq!(r.info.n_ui, 0);
        assert_eq!(r.observation.ratings_vector[0], f64::from(expect) / 10.0);
    }

    #[test]
    fn repeat_is_shaped_and_memory_stores_unshaped() {
        let mut e = env(1, 0.5);
        e.reset().unwrap();
        let first = e.step(1).unwrap();
        let second = e.step(1).unwrap();
        assert!(second.reward <= first.reward);
        assert_eq!(second.info.n_ui, 1);
        assert_eq!(second.info.delta_t, Some(1));
        let stored: Vec<u8> = e
            .memory()
            .history()
            .iter()
            .map(|r| r.stored_rating)
            .collect();
        assert_eq!(stored, vec![first.info.perturbed, second.info.perturbed]);
        assert_eq!(
            second.info.shaped,
            postprocess::shape(second.info.perturbed, 1, 1, 0.5)
        );
    }

    #[test]
    fn terminates_at_horizon() {
        let mut e = env(2, 0.7);
        e.reset().unwrap();
        for i in 0..10 {
            let r = e.step(i % 4).unwrap();
            assert_eq!(r.terminated, i == 9);
        }
        assert!(matches!(e.step(0), Err(EnvError::NotReset)));
        assert_eq!(e.memory().history().len(), 10);
    }

    #[test]
    fn observation_most_recent_wins() {
        let mut m = Memory::new(
            vec![user(0)],
            (0..5).map(|i| movie(i, &["drama"], 5.0)).collect(),
        )
        .unwrap();
        assert!(encode_observation(&m, 0)
            .unwrap()
            .ratings_vector
            .iter()
            .all(|&x| x == 0.0));
        m.record_interaction(0, 3, 8, 0).unwrap();
        let v = encode_observation(&m, 0).unwrap().ratings_vector;
        assert_eq!(v, vec![0.0, 0.0, 0.0, 0.8, 0.0]);
        m.record_interaction(0, 3, 4, 1).unwrap();
        assert_eq!(encode_observation(&m, 0).unwrap().ratings_vector[3], 0.4);
        assert!(matches!(
            encode_observation(&m, 9),
            Err(CatalogError::UnknownUser(9))
        ));
    }

    #[test]
    fn rejects_mismatched_domain_and_unknown_item() {
        let mut e = env(1, 0.7);
        e.reset().unwrap();
        assert!(matches!(
            e.step(42),
            Err(EnvError::Catalog(CatalogError::UnknownItem(42)))
        ));
        let config = EnvConfig {
            prompt: PromptConfig::book(),
            ..Default::default()
        };
        let err = SuberEnv::new(
            config,
            Memory::new(vec![user(0)], vec![movie(0, &["drama"], 5.0)]).unwrap(),
            PromptTemplates::builtin(Domain::Book),
            None,
            SyntheticRater,
        )
        .err()
        .unwrap();
        assert!(err.to_string().contains("does not match"));
    }
}
