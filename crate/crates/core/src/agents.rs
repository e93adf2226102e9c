//! Low-rank masked-softmax actor, two-layer critic and an A2C trainer with
//! hand-written gradients, plus a uniform random baseline.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, Observation, SuberEnv};
use crate::math;
use crate::rater::Rater;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("every item is masked")]
    AllMasked,
    #[error("{what}: expected length {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("user index {0} out of range")]
    UserIndex(usize),
    #[error("probabilities are not a distribution (sum {0})")]
    Degenerate(f64),
    #[error("k = {k} exceeds the {available} unmasked items")]
    TooMany { k: usize, available: usize },
    #[error("non-finite loss: policy {policy_loss}, value {value_loss}, entropy {entropy}")]
    NonFinite {
        policy_loss: f64,
        value_loss: f64,
        entropy: f64,
    },
    #[error("invalid A2C config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), AgentError> {
    if expected == got {
        Ok(())
    } else {
        Err(AgentError::Dimension {
            what,
            expected,
            got,
        })
    }
}

/// Softmax over unmasked entries; masked entries get probability 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>, AgentError> {
    check_len("mask", logits.len(), mask.len())?;
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| !m)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(AgentError::AllMasked);
    }
    let mut probs: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&z, &m)| if m { 0.0 } else { math::exp(z - max) })
        .collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    Ok(probs)
}

fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

/// `softmax(E e_u + b)` over items, with per-user embedding rows `e_u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankPolicy {
    pub n_users: usize,
    pub n_items: usize,
    pub dim: usize,
    /// `n_items x dim`, row-major.
    pub item_embeddings: Vec<f64>,
    /// `n_users x dim`, row-major.
    pub user_embeddings: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LowRankPolicy {
    pub fn zeros(n_users: usize, n_items: usize, dim: usize) -> Self {
        LowRankPolicy {
            n_users,
            n_items,
            dim,
            item_embeddings: vec![0.0; n_items * dim],
            user_embeddings: vec![0.0; n_users * dim],
            bias: vec![0.0; n_items],
        }
    }

    /// Entries drawn from U(-0.1, 0.1).
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        n_users: usize,
        n_items: usize,
        dim: usize,
    ) -> Self {
        LowRankPolicy {
            n_users,
            n_items,
            dim,
            item_embeddings: uniform_vec(rng, n_items * dim, 0.1),
            user_embeddings: uniform_vec(rng, n_users * dim, 0.1),
            bias: uniform_vec(rng, n_items, 0.1),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        check_len(
            "item embeddings",
            self.n_items * self.dim,
            self.item_embeddings.len(),
        )?;
        check_len(
            "user embeddings",
            self.n_users * self.dim,
            self.user_embeddings.len(),
        )?;
        check_len("bias", self.n_items, self.bias.len())
    }

    fn user_row(&self, user_index: usize) -> Result<&[f64], AgentError> {
        if user_index >= self.n_users {
            return Err(AgentError::UserIndex(user_index));
        }
        Ok(&self.user_embeddings[user_index * self.dim..(user_index + 1) * self.dim])
    }

    pub fn logits(&self, user_index: usize) -> Result<Vec<f64>, AgentError> {
        let eu = self.user_row(user_index)?;
        Ok(self
            .item_embeddings
            .chunks_exact(self.dim.max(1))
            .zip(&self.bias)
            .map(|(row, b)| dot(row, eu) + b)
            .collect())
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.item_embeddings
            .iter()
            .chain(&self.user_embeddings)
            .chain(&self.bias)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.item_embeddings
            .iter_mut()
            .chain(&mut self.user_embeddings)
            .chain(&mut self.bias)
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.n_users, self.n_items, self.dim)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn action_probs(
    policy: &LowRankPolicy,
    user_index: usize,
    seen_mask: &[bool],
) -> Result<Vec<f64>, AgentError> {
    masked_softmax(&policy.logits(user_index)?, seen_mask)
}

/// Categorical draw over item indices.
pub fn sample_action<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> Result<usize, AgentError> {
    let sum: f64 = probs.iter().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > 1e-9 || probs.iter().any(|p| *p < 0.0) {
        return Err(AgentError::Degenerate(sum));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = Some(i);
            if u < acc {
                return Ok(i);
            }
        }
    }
    last.ok_or(AgentError::Degenerate(sum))
}

/// Indices of the `k` best unmasked scores, ties to the lower index.
pub fn top_k_by_score(scores: &[f64], mask: &[bool], k: usize) -> Result<Vec<usize>, AgentError> {
    check_len("mask", scores.len(), mask.len())?;
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| !mask[i]).collect();
    if k > idx.len() {
        return Err(AgentError::TooMany {
            k,
            available: idx.len(),
        });
    }
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

pub fn top_k_recommendations(
    policy: &LowRankPolicy,
    user_index: usize,
    seen_mask: &[bool],
    k: usize,
) -> Result<Vec<usize>, AgentError> {
    top_k_by_score(&action_probs(policy, user_index, seen_mask)?, seen_mask, k)
}

/// `V(s) = w2 . tanh(W1 x + b1) + b2` with
/// `x = [one_hot(user) | ratings | remaining]`.
///
/// `remaining` is the fraction of the episode still to come. The ratings
/// vector persists across episodes, so without it a mid-episode state looks
/// like a fresh one and n-step bootstrapping inflates values without bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticMlp {
    pub n_users: usize,
    pub n_items: usize,
    pub hidden: usize,
    /// `hidden x (n_users + n_items + 1)`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl CriticMlp {
    pub fn zeros(n_users: usize, n_items: usize, hidden: usize) -> Self {
        CriticMlp {
            n_users,
            n_items,
            hidden,
            w1: vec![0.0; hidden * (n_users + n_items + 1)],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Weights from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        n_users: usize,
        n_items: usize,
        hidden: usize,
    ) -> Self {
        let input = n_users + n_items + 1;
        CriticMlp {
            n_users,
            n_items,
            hidden,
            w1: uniform_vec(rng, hidden * input, 1.0 / math::sqrt(input as f64)),
            b1: vec![0.0; hidden],
            w2: uniform_vec(rng, hidden, 1.0 / math::sqrt(hidden as f64)),
            b2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        check_len("critic w1", self.hidden * self.input_dim(), self.w1.len())?;
        check_len("critic b1", self.hidden, self.b1.len())?;
        check_len("critic w2", self.hidden, self.w2.len())
    }

    fn input_dim(&self) -> usize {
        self.n_users + self.n_items + 1
    }

    fn hidden_activations(
        &self,
        user_index: usize,
        ratings: &[f64],
        remaining: f64,
    ) -> Result<Vec<f64>, AgentError> {
        if user_index >= self.n_users {
            return Err(AgentError::UserIndex(user_index));
        }
        check_len("ratings vector", self.n_items, ratings.len())?;
        let input = self.input_dim();
        Ok(self
            .w1
            .chunks_exact(input)
            .zip(&self.b1)
            .map(|(row, b)| {
                let pre = row[user_index]
                    + dot(&row[self.n_users..input - 1], ratings)
                    + row[input - 1] * remaining
                    + b;
                math::tanh(pre)
            })
            .collect())
    }

    pub fn value(
        &self,
        user_index: usize,
        ratings: &[f64],
        remaining: f64,
    ) -> Result<f64, AgentError> {
        let h = self.hidden_activations(user_index, ratings, remaining)?;
        Ok(dot(&h, &self.w2) + self.b2)
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(core::iter::once(&self.b2))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(core::iter::once(&mut self.b2))
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.n_users, self.n_items, self.hidden)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct A2CConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub n_steps: usize,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub total_steps: u64,
    /// Rewards are multiplied by this before entering the losses.
    pub reward_scale: f64,
    pub embedding_dim: usize,
    pub critic_hidden: usize,
    /// Global gradient-norm clip; 0 disables clipping.
    pub max_grad_norm: f64,
    pub optimizer: OptimizerKind,
    /// RMSprop decay of the squared-gradient average.
    pub rms_alpha: f64,
    pub rms_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Rmsprop,
}

/// Per-parameter optimizer state: actor parameters then critic parameters.
/// Empty until the first RMSprop step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimizerState {
    pub square_avg: Vec<f64>,
}

impl Default for A2CConfig {
    fn default() -> Self {
        A2CConfig {
            gamma: 0.975,
            learning_rate: 0.002,
            n_steps: 5,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            total_steps: 50_000,
            reward_scale: 0.1,
            embedding_dim: 32,
            critic_hidden: 64,
            max_grad_norm: 0.5,
            optimizer: OptimizerKind::Rmsprop,
            rms_alpha: 0.99,
            rms_eps: 1e-5,
        }
    }
}

impl A2CConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(AgentError::Config("gamma must be in (0, 1]"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(AgentError::Config("learning_rate must be positive"));
        }
        if self.n_steps == 0 {
            return Err(AgentError::Config("n_steps must be at least 1"));
        }
        if self.embedding_dim == 0 || self.critic_hidden == 0 {
            return Err(AgentError::Config("dimensions must be at least 1"));
        }
        if !(self.rms_alpha >= 0.0 && self.rms_alpha < 1.0 && self.rms_eps > 0.0) {
            return Err(AgentError::Config(
                "rms_alpha must be in [0, 1) and rms_eps positive",
            ));
        }
        if !(self.value_coeff >= 0.0 && self.entropy_coeff >= 0.0 && self.max_grad_norm >= 0.0) {
            return Err(AgentError::Config("coefficients must be non-negative"));
        }
        Ok(())
    }
}

/// One environment step as seen by the learner. `mask` is the seen-mask in
/// force when the action was chosen, `remaining` the fraction of the episode
/// left before it, and `reward` is already scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub user_index: usize,
    pub ratings: Vec<f64>,
    pub remaining: f64,
    pub mask: Vec<bool>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
}

/// Consecutive transitions plus the state after the last one, used for
/// bootstrapping when the last transition is not terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub transitions: Vec<Transition>,
    /// `(user_index, ratings, remaining)`.
    pub next_state: Option<(usize, Vec<f64>, f64)>,
}

/// Rollout with n-step returns and advantages fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub transitions: Vec<Transition>,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
}

pub fn prepare_batch(
    critic: &CriticMlp,
    rollout: Rollout,
    gamma: f64,
) -> Result<Batch, AgentError> {
    let mut next = match (&rollout.next_state, rollout.transitions.last()) {
        (Some((u, r, rem)), Some(t)) if !t.done => critic.value(*u, r, *rem)?,
        _ => 0.0,
    };
    let n = rollout.transitions.len();
    let mut returns = vec![0.0; n];
    for i in (0..n).rev() {
        let t = &rollout.transitions[i];
        if t.done {
            next = 0.0;
        }
        next = t.reward + gamma * next;
        returns[i] = next;
    }
    let mut advantages = Vec::with_capacity(n);
    for (t, ret) in rollout.transitions.iter().zip(&returns) {
        advantages.push(ret - critic.value(t.user_index, &t.ratings, t.remaining)?);
    }
    Ok(Batch {
        transitions: rollout.transitions,
        returns,
        advantages,
    })
}

/// Batch mean of `-A log pi(a|s) + c_v (R - V(s))^2 - c_e H(pi(.|s))` with
/// advantages and returns held fixed.
pub fn a2c_loss(
    policy: &LowRankPolicy,
    critic: &CriticMlp,
    batch: &Batch,
    config: &A2CConfig,
) -> Result<LossDiagnostics, AgentError> {
    Ok(a2c_gradients(policy, critic, batch, config)?.2)
}

/// Gradients of [`a2c_loss`] with respect to every actor and critic
/// parameter, in the shapes of the parameters themselves.
pub fn a2c_gradients(
    policy: &LowRankPolicy,
    critic: &CriticMlp,
    batch: &Batch,
    config: &A2CConfig,
) -> Result<(LowRankPolicy, CriticMlp, LossDiagnostics), AgentError> {
    let mut gp = policy.zeros_like();
    let mut gc = critic.zeros_like();
    let n = batch.transitions.len();
    if n == 0 {
        return Ok((gp, gc, LossDiagnostics::default()));
    }
    let inv_n = 1.0 / n as f64;
    let d = policy.dim;
    let input = critic.input_dim();
    let mut diag = LossDiagnostics::default();
    let mut dlogits = vec![0.0; policy.n_items];
    for ((t, &ret), &adv) in batch
        .transitions
        .iter()
        .zip(&batch.returns)
        .zip(&batch.advantages)
    {
        let probs = action_probs(policy, t.user_index, &t.mask)?;
        let p_a = probs[t.action];
        let log_pa = math::ln(p_a);
        let entropy: f64 = -probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * math::ln(p))
            .sum::<f64>();
        diag.policy_loss += -adv * log_pa * inv_n;
        diag.entropy += entropy * inv_n;

        // d/dz_j of -A log p_a - c_e H, scaled by 1/n.
        for (j, (&p, g)) in probs.iter().zip(dlogits.iter_mut()).enumerate() {
            let onehot = if j == t.action { 1.0 } else { 0.0 };
            let ent = if p > 0.0 {
                config.entropy_coeff * p * (math::ln(p) + entropy)
            } else {
                0.0
            };
            *g = (-adv * (onehot - p) + ent) * inv_n;
        }
        let eu_start = t.user_index * d;
        for (j, &g) in dlogits.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            gp.bias[j] += g;
            for k in 0..d {
                gp.item_embeddings[j * d + k] += g * policy.user_embeddings[eu_start + k];
                gp.user_embeddings[eu_start + k] += g * policy.item_embeddings[j * d + k];
            }
        }

        let h = critic.hidden_activations(t.user_index, &t.ratings, t.remaining)?;
        let v = dot(&h, &critic.w2) + critic.b2;
        let err = ret - v;
        diag.value_loss += err * err * inv_n;
        let dv = -2.0 * config.value_coeff * err * inv_n;
        gc.b2 += dv;
        for (k, &a) in h.iter().enumerate() {
            gc.w2[k] += dv * a;
            let gh = dv * critic.w2[k] * (1.0 - a * a);
            gc.b1[k] += gh;
            let row = &mut gc.w1[k * input..(k + 1) * input];
            row[t.user_index] += gh;
            for (w, &x) in row[critic.n_users..input - 1].iter_mut().zip(&t.ratings) {
                *w += gh * x;
            }
            row[input - 1] += gh * t.remaining;
        }
    }
    diag.total = diag.policy_loss + config.value_coeff * diag.value_loss
        - config.entropy_coeff * diag.entropy;
    Ok((gp, gc, diag))
}

/// One optimizer step on a rollout collected under the current policy.
pub fn a2c_update(
    policy: &mut LowRankPolicy,
    critic: &mut CriticMlp,
    state: &mut OptimizerState,
    rollout: Rollout,
    config: &A2CConfig,
) -> Result<LossDiagnostics, AgentError> {
    let batch = prepare_batch(critic, rollout, config.gamma)?;
    let (mut gp, mut gc, diag) = a2c_gradients(policy, critic, &batch, config)?;
    if !(diag.policy_loss.is_finite() && diag.value_loss.is_finite() && diag.entropy.is_finite()) {
        return Err(AgentError::NonFinite {
            policy_loss: diag.policy_loss,
            value_loss: diag.value_loss,
            entropy: diag.entropy,
        });
    }
    if config.max_grad_norm > 0.0 {
        let norm = math::sqrt(gp.params().chain(gc.params()).map(|g| g * g).sum());
        if norm > config.max_grad_norm {
            let s = config.max_grad_norm / norm;
            gp.params_mut().chain(gc.params_mut()).for_each(|g| *g *= s);
        }
    }
    let lr = config.learning_rate;
    let params = policy.params_mut().chain(critic.params_mut());
    let grads = gp.params().chain(gc.params());
    match config.optimizer {
        OptimizerKind::Sgd => {
            for (p, g) in params.zip(grads) {
                *p -= lr * g;
            }
        }
        OptimizerKind::Rmsprop => {
            let n = gp.params().count() + gc.params().count();
            if state.square_avg.len() != n {
                state.square_avg = vec![0.0; n];
            }
            let a = config.rms_alpha;
            for ((p, g), sq) in params.zip(grads).zip(state.square_avg.iter_mut()) {
                *sq = a * *sq + (1.0 - a) * g * g;
                *p -= lr * g / (math::sqrt(*sq) + config.rms_eps);
            }
        }
    }
    Ok(diag)
}

/// Anything that scores items for a user; higher is better.
pub trait Recommender {
    fn scores(&mut self, user_index: usize) -> Result<Vec<f64>, AgentError>;

    fn recommend(
        &mut self,
        user_index: usize,
        mask: &[bool],
        k: usize,
    ) -> Result<Vec<usize>, AgentError> {
        top_k_by_score(&self.scores(user_index)?, mask, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2CAgent {
    pub config: A2CConfig,
    pub policy: LowRankPolicy,
    pub critic: CriticMlp,
    #[serde(default)]
    pub optimizer: OptimizerState,
    pub rng: ChaCha8Rng,
    pub steps_done: u64,
}

impl A2CAgent {
    pub fn new(
        config: A2CConfig,
        n_users: usize,
        n_items: usize,
        seed: u64,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = LowRankPolicy::random(&mut rng, n_users, n_items, config.embedding_dim);
        let critic = CriticMlp::random(&mut rng, n_users, n_items, config.critic_hidden);
        Ok(A2CAgent {
            config,
            policy,
            critic,
            optimizer: OptimizerState::default(),
            rng,
            steps_done: 0,
        })
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        self.config.validate()?;
        self.policy.validate()?;
        self.critic.validate()
    }
}

impl Recommender for A2CAgent {
    fn scores(&mut self, user_index: usize) -> Result<Vec<f64>, AgentError> {
        self.policy.logits(user_index)
    }

    fn recommend(
        &mut self,
        user_index: usize,
        mask: &[bool],
        k: usize,
    ) -> Result<Vec<usize>, AgentError> {
        top_k_recommendations(&self.policy, user_index, mask, k)
    }
}

/// Uniformly random rankings.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    n_items: usize,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(n_items: usize, seed: u64) -> Self {
        RandomAgent {
            n_items,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Recommender for RandomAgent {
    fn scores(&mut self, _user_index: usize) -> Result<Vec<f64>, AgentError> {
        Ok((0..self.n_items).map(|_| self.rng.random()).collect())
    }
}

/// Summary of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainSummary {
    pub steps: u64,
    pub episodes: u64,
    pub updates: u64,
    pub mean_reward: f64,
    pub last_loss: LossDiagnostics,
}

/// Resumable A2C loop. Running `a` steps and then `b` steps gives the same
/// trajectory as running `a + b` at once.
#[derive(Debug, Clone, Default)]
pub struct Trainer {
    obs: Option<Observation>,
    /// Episode fraction left at `obs`.
    obs_remaining: f64,
    transitions: Vec<Transition>,
    reward_sum: f64,
    summary: TrainSummary,
}

impl Trainer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Takes `steps` environment steps, updating whenever `n_steps`
    /// transitions are buffered. `on_step` receives the global step number
    /// and the unscaled reward.
    pub fn run<R: Rater>(
        &mut self,
        agent: &mut A2CAgent,
        env: &mut SuberEnv<R>,
        steps: u64,
        mut on_step: impl FnMut(u64, f64),
    ) -> Result<(), AgentError> {
        agent.validate()?;
        check_len("policy users", env.n_users(), agent.policy.n_users)?;
        check_len("policy items", env.n_items(), agent.policy.n_items)?;
        let config = agent.config;
        let mut obs = match self.obs.take() {
            Some(o) => o,
            None => env.reset()?,
        };
        for _ in 0..steps {
            let mask = env.seen_mask().ok_or(EnvError::NotReset)?.to_vec();
            let remaining = remaining_fraction(env)?;
            let probs = action_probs(&agent.policy, obs.user_index, &mask)?;
            let action = sample_action(&mut agent.rng, &probs)?;
            let item_id = env.memory().items()[action].item_id;
            let result = env.step(item_id)?;
            self.reward_sum += result.reward;
            on_step(agent.steps_done, result.reward);
            agent.steps_done += 1;
            self.summary.steps += 1;
            self.transitions.push(Transition {
                user_index: obs.user_index,
                ratings: obs.ratings_vector,
                remaining,
                mask,
                action,
                reward: result.reward * config.reward_scale,
                done: result.terminated,
            });
            obs = if result.terminated {
                self.summary.episodes += 1;
                env.reset()?
            } else {
                result.observation
            };
            if self.transitions.len() >= config.n_steps {
                let next = (
                    obs.user_index,
                    obs.ratings_vector.clone(),
                    remaining_fraction(env)?,
                );
                self.update(agent, next)?;
            }
        }
        self.obs_remaining = remaining_fraction(env)?;
        self.obs = Some(obs);
        Ok(())
    }

    fn update(
        &mut self,
        agent: &mut A2CAgent,
        next: (usize, Vec<f64>, f64),
    ) -> Result<(), AgentError> {
        let rollout = Rollout {
            transitions: core::mem::take(&mut self.transitions),
            next_state: Some(next),
        };
        self.summary.last_loss = a2c_update(
            &mut agent.policy,
            &mut agent.critic,
            &mut agent.optimizer,
            rollout,
            &agent.config,
        )?;
        self.summary.updates += 1;
        Ok(())
    }

    /// Flushes buffered transitions into a final update.
    pub fn finish(mut self, agent: &mut A2CAgent) -> Result<TrainSummary, AgentError> {
        if !self.transitions.is_empty() {
            let next = self.obs.take().expect("run buffered transitions");
            let remaining = self.obs_remaining;
            self.update(agent, (next.user_index, next.ratings_vector, remaining))?;
        }
        if self.summary.steps > 0 {
            self.summary.mean_reward = self.reward_sum / self.summary.steps as f64;
        }
        Ok(self.summary)
    }
}

fn remaining_fraction<R: Rater>(env: &SuberEnv<R>) -> Result<f64, AgentError> {
    let seen = env.seen_mask().ok_or(EnvError::NotReset)?;
    let horizon = env.config().horizon as f64;
    let taken = seen.iter().filter(|&&s| s).count() as f64;
    Ok(((horizon - taken) / horizon).max(0.0))
}

/// Trains for `agent.config.total_steps` steps.
pub fn train_a2c<R: Rater>(
    agent: &mut A2CAgent,
    env: &mut SuberEnv<R>,
    on_step: impl FnMut(u64, f64),
) -> Result<TrainSummary, AgentError> {
    let mut trainer = Trainer::new();
    trainer.run(agent, env, agent.config.total_steps, on_step)?;
    trainer.finish(agent)
}
