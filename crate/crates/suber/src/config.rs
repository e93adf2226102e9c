//! Experiment configuration: one JSON file plus `key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use suber_core::agents::A2CConfig;
use suber_core::eval::{Suite, SuiteConfig};
use suber_core::EnvConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("bad override {0:?}: expected key=value")]
    OverrideSyntax(String),
    #[error("override key {0:?} is not a config key")]
    UnknownKey(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Input files. Relative paths are resolved against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataPaths {
    pub items: Option<PathBuf>,
    pub users: Option<PathBuf>,
    pub personas: Option<PathBuf>,
    pub franchises: Option<PathBuf>,
    pub reference_ratings: Option<PathBuf>,
    /// Item embeddings JSONL; hashed bag-of-words vectors when absent.
    pub embeddings: Option<PathBuf>,
    /// Directory of replacement prompt template files.
    pub templates: Option<PathBuf>,
    pub sampling_tables: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub run: Vec<Suite>,
    #[serde(flatten)]
    pub params: SuiteConfig,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            run: Suite::ALL.to_vec(),
            params: SuiteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserGenConfig {
    pub count: usize,
    pub first_id: u32,
}

impl Default for UserGenConfig {
    fn default() -> Self {
        UserGenConfig {
            count: 20,
            first_id: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Steps between checkpoint files; 0 writes only the final one.
    pub checkpoint_every: u64,
    /// Trailing window of the learning curve's moving average.
    pub curve_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            checkpoint_every: 10_000,
            curve_window: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub steps: u64,
    /// Items recommended in turn, cycling; random picks when empty.
    pub items: Vec<u32>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            steps: 20,
            items: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub data: DataPaths,
    #[serde(flatten)]
    pub env: EnvConfig,
    pub agent: A2CConfig,
    pub ablation: AblationConfig,
    pub users: UserGenConfig,
    pub train: TrainConfig,
    pub simulate: SimulateConfig,
}

fn parse_override(raw: &str) -> Result<(Vec<&str>, Value), ConfigError> {
    let (key, value) = raw
        .split_once('=')
        .filter(|(k, _)| !k.trim().is_empty())
        .ok_or_else(|| ConfigError::OverrideSyntax(raw.into()))?;
    let value = value.trim();
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.into()));
    Ok((key.trim().split('.').collect(), parsed))
}

fn set_path(root: &mut Value, path: &[&str], value: Value) {
    let mut cur = root;
    for key in &path[..path.len() - 1] {
        if !cur.get(*key).is_some_and(Value::is_object) {
            cur[*key] = Value::Object(Default::default());
        }
        cur = cur.get_mut(*key).expect("just inserted");
    }
    cur[path[path.len() - 1]] = value;
}

fn has_path(root: &Value, path: &[&str]) -> bool {
    let mut cur = root;
    for key in path {
        match cur.get(*key) {
            Some(v) => cur = v,
            None => return false,
        }
    }
    true
}

impl AppConfig {
    /// Parses `text`, applies `overrides` and validates the result.
    pub fn from_json_str(
        text: &str,
        overrides: &[String],
        origin: &Path,
    ) -> Result<Self, ConfigError> {
        let mut root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if !root.is_object() {
            return Err(ConfigError::Parse {
                path: origin.to_path_buf(),
                message: "top level must be a JSON object".into(),
            });
        }
        let mut keys = Vec::new();
        for raw in overrides {
            let (path, value) = parse_override(raw)?;
            set_path(&mut root, &path, value);
            keys.push((
                raw.clone(),
                path.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            ));
        }
        let config: AppConfig = serde_json::from_value(root).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let echoed = serde_json::to_value(&config).expect("config serializes");
        for (raw, path) in keys {
            let path: Vec<&str> = path.iter().map(String::as_str).collect();
            if !has_path(&echoed, &path) {
                return Err(ConfigError::UnknownKey(
                    raw.split('=').next().unwrap_or("").into(),
                ));
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Loads `path`, applies overrides and resolves data paths.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_json_str(&text, overrides, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let d = &mut self.data;
        for p in [
            &mut d.items,
            &mut d.users,
            &mut d.personas,
            &mut d.franchises,
            &mut d.reference_ratings,
            &mut d.embeddings,
            &mut d.templates,
            &mut d.sampling_tables,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.agent
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.train.curve_window == 0 {
            return Err(ConfigError::Invalid(
                "train.curve_window must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Applies a command-line seed to every seeded component.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.env.seed = s;
        }
        self.ablation.params.seed = self.env.seed;
        self
    }

    pub fn require<'a>(
        &self,
        path: &'a Option<PathBuf>,
        key: &str,
    ) -> Result<&'a Path, ConfigError> {
        path.as_deref()
            .ok_or_else(|| ConfigError::Invalid(format!("data.{key} is required for this command")))
    }
}
