//! Simulation core for an LLM-driven recommender environment.
//!
//! Synthetic users rate recommended items. The crate holds the memory module
//! (users, items, interaction history), item retrieval, prompt rendering,
//! rating sources, reward post-processing, the episodic environment, a
//! low-rank A2C recommender and the evaluation metrics and ablation suites.
//!
//! Everything here is `no_std` + `alloc`. File formats, the HTTP rater and
//! the command line live in the `suber` companion crate.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod agents;
pub mod catalog;
pub mod env;
pub mod eval;
mod math;
pub mod postprocess;
pub mod prompting;
pub mod rater;
pub mod retrieval;
pub mod scale;
pub mod template;
pub mod usergen;

pub use catalog::{
    Actor, CatalogError, Gender, InteractionRecord, ItemRecord, Memory, RatingBias, ReleaseDate,
    UserRecord,
};
pub use env::{EnvConfig, EnvError, Observation, StepInfo, StepResult, SuberEnv};
pub use prompting::{PromptConfig, RenderedPrompt, ScaleEncoding, SystemPromptKind};
pub use rater::{Rater, RaterError, RaterKind, RatingOutcome, RatingRequest, SyntheticRater};
pub use retrieval::{RetrievalKind, RetrievalStrategy, RetrievedItem};
pub use scale::{Domain, RatingScale};
