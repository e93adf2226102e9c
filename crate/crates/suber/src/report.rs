//! Serialized outputs: ablation and metrics reports, learning curves,
//! checkpoints and simulation transcripts.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use suber_core::agents::A2CAgent;
use suber_core::eval::AblationReport;
use suber_core::{EnvConfig, StepInfo};

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

/// `suite,score,stderr,queries,parse_failures` rows followed by the
/// aggregated score.
pub fn ablation_csv(report: &AblationReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["suite", "score", "stderr", "queries", "parse_failures"])
        .expect("in-memory write");
    for (suite, s) in report.suites() {
        w.write_record([
            suite.as_str().to_string(),
            s.score.to_string(),
            s.stderr.to_string(),
            s.queries.to_string(),
            s.parse_failures.to_string(),
        ])
        .expect("in-memory write");
    }
    w.write_record([
        "aggregated".to_string(),
        report.aggregated.to_string(),
        String::new(),
        String::new(),
        String::new(),
    ])
    .expect("in-memory write");
    w.into_inner().expect("in-memory flush")
}

/// Per-step rewards with a trailing moving average.
#[derive(Debug, Clone)]
pub struct LearningCurve {
    window: usize,
    recent: VecDeque<f64>,
    sum: f64,
    csv: String,
    rows: usize,
}

impl LearningCurve {
    pub fn new(window: usize) -> Self {
        LearningCurve {
            window: window.max(1),
            recent: VecDeque::new(),
            sum: 0.0,
            csv: String::from("step,reward,mean_reward\n"),
            rows: 0,
        }
    }

    pub fn push(&mut self, step: u64, reward: f64) {
        self.recent.push_back(reward);
        self.sum += reward;
        if self.recent.len() > self.window {
            self.sum -= self.recent.pop_front().expect("nonempty");
        }
        // Recomputed sums avoid drift from the running total.
        if self.rows.is_multiple_of(4096) {
            self.sum = self.recent.iter().sum();
        }
        let mean = self.sum / self.recent.len() as f64;
        self.csv.push_str(&format!("{step},{reward},{mean:.6}\n"));
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.csv.as_bytes()
    }
}

pub const CHECKPOINT_FORMAT: &str = "suber-a2c";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained agent with the catalog ids its matrices are indexed by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub step: u64,
    pub user_ids: Vec<u32>,
    pub item_ids: Vec<u32>,
    pub env: EnvConfig,
    pub agent: A2CAgent,
}

/// One line of a simulation transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: u64,
    pub user_id: u32,
    pub item_id: u32,
    pub prompt_id: String,
    pub prompt: String,
    pub raw_text: String,
    pub raw: u8,
    pub perturbed: u8,
    pub shaped: u8,
    pub reward: f64,
    pub n_ui: usize,
    pub delta_t: Option<u64>,
    pub terminated: bool,
}

impl TranscriptEntry {
    pub fn new(info: &StepInfo, reward: f64, terminated: bool) -> Self {
        TranscriptEntry {
            step: info.step,
            user_id: info.user_id,
            item_id: info.item_id,
            prompt_id: format!("{:016x}", info.prompt_id),
            prompt: info.prompt.to_text(),
            raw_text: info.raw_text.clone(),
            raw: info.raw,
            perturbed: info.perturbed,
            shaped: info.shaped,
            reward,
            n_ui: info.n_ui,
            delta_t: info.delta_t,
            terminated,
        }
    }
}
