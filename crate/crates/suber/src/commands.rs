//! Subcommand implementations. Each returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use suber_core::agents::{A2CAgent, AgentError, RandomAgent, Recommender, Trainer};
use suber_core::eval::{evaluate_recommender, EvalError, SuiteContext, SuiteFixtures};
use suber_core::prompting::PromptTemplates;
use suber_core::retrieval::{EmbeddingTable, RetrievalKind};
use suber_core::usergen::{generate_users, SamplingTables};
use suber_core::{Domain, EnvError, ItemRecord, Memory, RaterError, SuberEnv, UserRecord};
use thiserror::Error;

use crate::config::{AppConfig, ConfigError};
use crate::data::{self, DataError};
use crate::llm::AnyRater;
use crate::report::{self, Checkpoint, LearningCurve, TranscriptEntry};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CommandError {
    /// 1 for configuration and input problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Runtime(_) => 2,
            _ => 1,
        }
    }
}

impl From<EnvError> for CommandError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Config(_) | EnvError::EmptyCatalog | EnvError::Catalog(_) => {
                CommandError::Input(e.to_string())
            }
            other => CommandError::Runtime(other.to_string()),
        }
    }
}

impl From<AgentError> for CommandError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Env(env) => env.into(),
            AgentError::Config(_) | AgentError::Dimension { .. } => {
                CommandError::Input(e.to_string())
            }
            other => CommandError::Runtime(other.to_string()),
        }
    }
}

impl From<EvalError> for CommandError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Env(env) => env.into(),
            EvalError::Agent(a) => a.into(),
            EvalError::MissingFixture(_) | EvalError::Catalog(_) => {
                CommandError::Input(e.to_string())
            }
            other => CommandError::Runtime(other.to_string()),
        }
    }
}

impl From<RaterError> for CommandError {
    fn from(e: RaterError) -> Self {
        match e {
            RaterError::Config(_) => CommandError::Input(e.to_string()),
            other => CommandError::Runtime(format!("rater failed: {other}")),
        }
    }
}

fn write(path: PathBuf, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), CommandError> {
    data::write_atomic(&path, bytes).map_err(|e| CommandError::Runtime(e.to_string()))?;
    written.push(path);
    Ok(())
}

/// Catalog, templates and embeddings shared by the subcommands.
pub struct Inputs {
    pub config: AppConfig,
    pub items: Vec<ItemRecord>,
    pub users: Vec<UserRecord>,
    pub templates: PromptTemplates,
    pub embeddings: Option<EmbeddingTable>,
    pub rater: AnyRater,
}

impl Inputs {
    pub fn load(config: AppConfig) -> Result<Self, CommandError> {
        let items = data::read_items(config.require(&config.data.items, "items")?)?;
        let users = data::read_users(config.require(&config.data.users, "users")?)?;
        let domain = config.env.prompt.domain;
        if let Some(item) = items.iter().find(|i| i.domain != domain) {
            return Err(CommandError::Input(format!(
                "item {} is a {} but the prompt domain is {}",
                item.item_id,
                item.domain.as_str(),
                domain.as_str()
            )));
        }
        let templates = match &config.data.templates {
            Some(dir) => {
                if !dir.is_dir() {
                    return Err(CommandError::Input(format!(
                        "template directory {} does not exist",
                        dir.display()
                    )));
                }
                PromptTemplates::from_lookup(domain, |part| {
                    fs::read_to_string(dir.join(format!("{}_{part}.txt", domain.as_str()))).ok()
                })
            }
            None => PromptTemplates::builtin(domain),
        };
        let embeddings = match (&config.data.embeddings, config.env.retrieval.kind) {
            (Some(path), _) => Some(data::read_embeddings(path)?),
            (None, RetrievalKind::EmbeddingSimilarity) => Some(
                EmbeddingTable::from_items(&items)
                    .map_err(|e| CommandError::Input(e.to_string()))?,
            ),
            (None, _) => None,
        };
        let rater = AnyRater::from_kind(&config.env.rater);
        Ok(Inputs {
            config,
            items,
            users,
            templates,
            embeddings,
            rater,
        })
    }

    pub fn domain(&self) -> Domain {
        self.config.env.prompt.domain
    }

    pub fn memory(&self) -> Result<Memory, CommandError> {
        Memory::new(self.users.clone(), self.items.clone())
            .map_err(|e| CommandError::Input(e.to_string()))
    }

    pub fn env(&self) -> Result<SuberEnv<&AnyRater>, CommandError> {
        Ok(SuberEnv::new(
            self.config.env.clone(),
            self.memory()?,
            self.templates.clone(),
            self.embeddings.clone(),
            &self.rater,
        )?)
    }
}

pub fn generate_users_cmd(config: AppConfig, out: &Path) -> Result<Vec<PathBuf>, CommandError> {
    let tables = match &config.data.sampling_tables {
        Some(p) => data::read_sampling_tables(p)?,
        None => SamplingTables::default(),
    };
    let rater = AnyRater::from_kind(&config.env.rater);
    let mut rng = ChaCha8Rng::seed_from_u64(config.env.seed);
    let users = generate_users(
        &mut rng,
        &rater,
        &tables,
        config.users.count,
        config.users.first_id,
        config.env.prompt.domain,
    )?;
    let mut written = Vec::new();
    write(
        out.join("users.jsonl"),
        &data::jsonl_bytes(&users),
        &mut written,
    )?;
    Ok(written)
}

pub fn run_ablation_cmd(config: AppConfig, out: &Path) -> Result<Vec<PathBuf>, CommandError> {
    let inputs = Inputs::load(config)?;
    let cfg = &inputs.config;
    let domain = inputs.domain();
    let personas = match &cfg.data.personas {
        Some(p) => data::read_users(p)?,
        None => Vec::new(),
    };
    if let Some(p) = &cfg.data.personas {
        data::check_disjoint_ids(&inputs.users, &personas, p)?;
    }
    let franchises = match &cfg.data.franchises {
        Some(p) => data::read_franchises(p)?,
        None => Vec::new(),
    };
    let reference = match &cfg.data.reference_ratings {
        Some(p) => data::read_reference_ratings(p, domain)?,
        None => Vec::new(),
    };
    let fixtures = SuiteFixtures {
        personas: personas.clone(),
        franchises,
        reference,
    };
    let mut all_users = inputs.users.clone();
    all_users.extend(personas);
    let memory = Memory::new(all_users, inputs.items.clone())
        .map_err(|e| CommandError::Input(e.to_string()))?;
    // Building an environment checks the config against the catalog.
    let env = SuberEnv::new(
        cfg.env.clone(),
        memory,
        inputs.templates.clone(),
        inputs.embeddings.clone(),
        &inputs.rater,
    )?;
    let ctx = SuiteContext {
        pipeline: env.pipeline(),
        rater: &inputs.rater,
        memory: env.memory(),
        fixtures: &fixtures,
    };
    let report = ctx.run_ablation(&cfg.ablation.run, &cfg.ablation.params)?;
    let mut written = Vec::new();
    write(
        out.join("ablation.json"),
        &report::json_bytes(&report),
        &mut written,
    )?;
    write(
        out.join("ablation.csv"),
        &report::ablation_csv(&report),
        &mut written,
    )?;
    Ok(written)
}

fn checkpoint(inputs: &Inputs, agent: &A2CAgent) -> Checkpoint {
    Checkpoint {
        format: report::CHECKPOINT_FORMAT.into(),
        version: report::CHECKPOINT_VERSION,
        step: agent.steps_done,
        user_ids: sorted_ids(inputs.users.iter().map(|u| u.user_id)),
        item_ids: sorted_ids(inputs.items.iter().map(|i| i.item_id)),
        env: inputs.config.env.clone(),
        agent: agent.clone(),
    }
}

fn sorted_ids(ids: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut v: Vec<u32> = ids.collect();
    v.sort_unstable();
    v
}

/// Agent seed derived from the experiment seed, distinct from the
/// environment's stream.
pub fn agent_seed(seed: u64) -> u64 {
    seed ^ 0x5eed_a2c0_0000_0001
}

pub fn train_cmd(config: AppConfig, out: &Path) -> Result<Vec<PathBuf>, CommandError> {
    let inputs = Inputs::load(config)?;
    let cfg = &inputs.config;
    let mut env = inputs.env()?;
    let mut agent = A2CAgent::new(
        cfg.agent,
        env.n_users(),
        env.n_items(),
        agent_seed(cfg.env.seed),
    )?;
    let mut curve = LearningCurve::new(cfg.train.curve_window);
    let mut trainer = Trainer::new();
    let mut written = Vec::new();
    let total = cfg.agent.total_steps;
    let chunk = if cfg.train.checkpoint_every == 0 {
        total.max(1)
    } else {
        cfg.train.checkpoint_every
    };
    let mut done = 0;
    while done < total {
        let steps = chunk.min(total - done);
        trainer.run(&mut agent, &mut env, steps, |step, reward| {
            curve.push(step, reward)
        })?;
        done += steps;
        if cfg.train.checkpoint_every > 0 && done < total {
            let path = out
                .join("checkpoints")
                .join(format!("checkpoint_{done:08}.json"));
            write(
                path,
                &report::json_bytes(&checkpoint(&inputs, &agent)),
                &mut written,
            )?;
        }
    }
    let summary = trainer.finish(&mut agent)?;
    write(
        out.join("checkpoint.json"),
        &report::json_bytes(&checkpoint(&inputs, &agent)),
        &mut written,
    )?;
    write(
        out.join("learning_curve.csv"),
        curve.as_bytes(),
        &mut written,
    )?;
    write(
        out.join("train_summary.json"),
        &report::json_bytes(&summary),
        &mut written,
    )?;
    Ok(written)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CommandError> {
    let ck: Checkpoint = data::read_json(path)?;
    if ck.format != report::CHECKPOINT_FORMAT || ck.version != report::CHECKPOINT_VERSION {
        return Err(CommandError::Input(format!(
            "{}: unsupported checkpoint {} v{}",
            path.display(),
            ck.format,
            ck.version
        )));
    }
    ck.agent
        .validate()
        .map_err(|e| CommandError::Input(format!("{}: {e}", path.display())))?;
    Ok(ck)
}

/// Which policy `evaluate` scores.
pub enum EvalTarget<'a> {
    Checkpoint(&'a Path),
    Random,
}

pub fn evaluate_cmd(
    config: AppConfig,
    target: EvalTarget<'_>,
    out: &Path,
) -> Result<Vec<PathBuf>, CommandError> {
    let inputs = Inputs::load(config)?;
    let mut env = inputs.env()?;
    let (mut agent, name): (Box<dyn Recommender>, &str) = match target {
        EvalTarget::Checkpoint(path) => {
            let ck = load_checkpoint(path)?;
            let users = sorted_ids(inputs.users.iter().map(|u| u.user_id));
            let items = sorted_ids(inputs.items.iter().map(|i| i.item_id));
            if ck.user_ids != users || ck.item_ids != items {
                return Err(CommandError::Input(format!(
                    "{} was trained on a different catalog",
                    path.display()
                )));
            }
            (Box::new(ck.agent), "metrics.json")
        }
        EvalTarget::Random => (
            Box::new(RandomAgent::new(
                env.n_items(),
                agent_seed(inputs.config.env.seed),
            )),
            "metrics_random.json",
        ),
    };
    let metrics = evaluate_recommender(agent.as_mut(), &mut env)?;
    let mut written = Vec::new();
    write(out.join(name), &report::json_bytes(&metrics), &mut written)?;
    Ok(written)
}

pub fn simulate_cmd(config: AppConfig, out: &Path) -> Result<Vec<PathBuf>, CommandError> {
    let inputs = Inputs::load(config)?;
    let cfg = &inputs.config;
    let mut env = inputs.env()?;
    for id in &cfg.simulate.items {
        env.memory()
            .item(*id)
            .map_err(|e| CommandError::Input(format!("simulate.items: {e}")))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(agent_seed(cfg.env.seed));
    let mut lines = Vec::new();
    env.reset()?;
    for i in 0..cfg.simulate.steps {
        let item_id = if cfg.simulate.items.is_empty() {
            let mask = env.seen_mask().expect("episode running");
            let open: Vec<u32> = env
                .memory()
                .items()
                .iter()
                .zip(mask)
                .filter(|(_, &m)| !m)
                .map(|(it, _)| it.item_id)
                .collect();
            *open
                .choose(&mut rng)
                .ok_or_else(|| CommandError::Input("horizon is longer than the catalog".into()))?
        } else {
            cfg.simulate.items[i as usize % cfg.simulate.items.len()]
        };
        let result = env.step(item_id)?;
        lines.push(TranscriptEntry::new(
            &result.info,
            result.reward,
            result.terminated,
        ));
        if result.terminated {
            env.reset()?;
        }
    }
    let mut written = Vec::new();
    write(
        out.join("transcript.jsonl"),
        &data::jsonl_bytes(&lines),
        &mut written,
    )?;
    Ok(written)
}
