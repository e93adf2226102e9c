use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use suber_core::agents::{
    a2c_gradients, a2c_loss, prepare_batch, A2CConfig, Batch, CriticMlp, LowRankPolicy, Rollout,
    Transition,
};

use super::{ensure, Check};

pub const H: f64 = 1e-5;
pub const SEEDS: u64 = 4;

/// `|a - n| / max(|a|, |n|, 1e-7)`; the floor keeps near-zero entries from
/// amplifying rounding noise.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7)
}

fn fixture(seed: u64) -> (LowRankPolicy, CriticMlp, Batch, A2CConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (users, items) = (3, 5);
    let mut policy = LowRankPolicy::random(&mut rng, users, items, 4);
    // Larger weights than the init so every term is well away from zero.
    for p in policy.params_mut() {
        *p *= 5.0;
    }
    let critic = CriticMlp::random(&mut rng, users, items, 6);
    let config = A2CConfig {
        entropy_coeff: 0.05,
        value_coeff: 0.5,
        ..Default::default()
    };
    let mut transitions = Vec::new();
    for step in 0..6 {
        let mut mask = vec![false; items];
        mask[step % items] = true;
        let action = (step + 1 + rng.random_range(0..items - 1)) % items;
        let action = if mask[action] {
            (action + 1) % items
        } else {
            action
        };
        transitions.push(Transition {
            user_index: rng.random_range(0..users),
            ratings: (0..items)
                .map(|_| rng.random_range(0..10) as f64 / 10.0)
                .collect(),
            remaining: 1.0 - (step % 3) as f64 / 3.0,
            mask,
            action,
            reward: rng.random_range(0.0..1.0),
            done: step == 2,
        });
    }
    let rollout = Rollout {
        transitions,
        next_state: Some((1, vec![0.3; items], 0.7)),
    };
    let batch = prepare_batch(&critic, rollout, config.gamma).expect("valid rollout");
    (policy, critic, batch, config)
}

fn total(policy: &LowRankPolicy, critic: &CriticMlp, batch: &Batch, config: &A2CConfig) -> f64 {
    a2c_loss(policy, critic, batch, config)
        .expect("finite loss")
        .total
}

/// Central differences on a 3-user, 5-item fixture over several seeds,
/// actor and critic parameters alike. Returns the worst relative error.
pub fn check() -> Check {
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for seed in 0..SEEDS {
        let (policy, critic, batch, config) = fixture(seed);
        let (gp, gc, _) =
            a2c_gradients(&policy, &critic, &batch, &config).map_err(|e| e.to_string())?;

        let analytic: Vec<f64> = gp.params().copied().collect();
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = policy.clone();
            *plus.params_mut().nth(i).expect("param") += H;
            let mut minus = policy.clone();
            *minus.params_mut().nth(i).expect("param") -= H;
            let numeric = (total(&plus, &critic, &batch, &config)
                - total(&minus, &critic, &batch, &config))
                / (2.0 * H);
            worst = worst.max(rel_err(a, numeric));
        }

        let analytic_c: Vec<f64> = gc.params().copied().collect();
        for (i, &a) in analytic_c.iter().enumerate() {
            let mut plus = critic.clone();
            *plus.params_mut().nth(i).expect("param") += H;
            let mut minus = critic.clone();
            *minus.params_mut().nth(i).expect("param") -= H;
            let numeric = (total(&policy, &plus, &batch, &config)
                - total(&policy, &minus, &batch, &config))
                / (2.0 * H);
            worst = worst.max(rel_err(a, numeric));
        }
        params += analytic.len() + analytic_c.len();
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!(
        "{params} parameters over {SEEDS} seeds, max relative error {worst:.1e}"
    ))
}
