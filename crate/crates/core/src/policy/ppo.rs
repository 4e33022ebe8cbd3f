//! Rollout storage, returns, action sampling and the actor-critic loss.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{log_softmax, PolicyParams, NUM_ACTIONS};
use super::PolicyError;
use crate::env::Action;

/// Which actor objective to optimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    /// `−mean(min(ρA, clip(ρ, 1−c, 1+c)·A))`.
    #[default]
    PpoClip,
    /// `−mean(log π(a|s)·A)`, the plain advantage actor-critic gradient.
    A2c,
}

/// Knobs of the loss itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub mode: LossMode,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Standardise advantages over the batch before use.
    pub normalize_advantages: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { mode: LossMode::PpoClip, clip: 0.2, entropy_coef: 0.01, value_coef: 0.5, normalize_advantages: true }
    }
}

/// One episode of experience, stored column-wise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub terminal: bool,
}

impl Trajectory {
    pub fn push(&mut self, state: Vec<f64>, action: Action, reward: f64, log_prob: f64, value: f64) {
        self.states.push(state);
        self.actions.push(action);
        self.rewards.push(reward);
        self.log_probs.push(log_prob);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Appends another trajectory's samples.
    pub fn extend(&mut self, other: Trajectory) {
        self.states.extend(other.states);
        self.actions.extend(other.actions);
        self.rewards.extend(other.rewards);
        self.log_probs.extend(other.log_probs);
        self.values.extend(other.values);
        self.terminal = other.terminal;
    }
}

/// `R_t = r_t + γ·R_{t+1}` with zero after the last step.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}

/// Draws an action from a categorical distribution.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64; NUM_ACTIONS], rng: &mut R) -> Result<(Action, f64), PolicyError> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
        return Err(PolicyError::InvalidDistribution(format!("{probs:?}")));
    }
    let u: f64 = rng.random::<f64>() * sum;
    let mut cum = 0.0;
    let mut chosen = None;
    for (i, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        chosen = Some(i);
        cum += p;
        if u < cum {
            break;
        }
    }
    let i = chosen.expect("distribution has positive mass");
    Ok((Action::from_index(i).expect("index < 5"), probs[i].ln()))
}

/// Most likely action, ties to the lower index.
pub fn greedy_action(probs: &[f64; NUM_ACTIONS]) -> Action {
    let mut best = 0;
    for i in 1..NUM_ACTIONS {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    Action::from_index(best).expect("index < 5")
}

/// Loss value, its components and the gradient with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub actor: f64,
    pub critic: f64,
    pub entropy: f64,
    pub grads: Vec<f64>,
}

/// Advantages `R − V_old` for the selected samples, optionally standardised.
fn advantages(traj: &Trajectory, batch: &[usize], returns: &[f64], normalize: bool) -> Vec<f64> {
    let mut adv: Vec<f64> = batch.iter().map(|&i| returns[i] - traj.values[i]).collect();
    if normalize && adv.len() > 1 {
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt() + 1e-8;
        adv.iter_mut().for_each(|a| *a = (*a - mean) / std);
    }
    adv
}

/// Per-sample clipped surrogate `min(ρA, clip(ρ)·A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Actor-critic loss over `batch` (indices into `traj`).
///
/// The advantage uses the value estimate recorded at collection time;
/// the critic regresses the current value head onto `returns`.
pub fn ppo_loss(
    params: &PolicyParams,
    traj: &Trajectory,
    batch: &[usize],
    returns: &[f64],
    cfg: &LossConfig,
) -> Result<LossOutput, PolicyError> {
    if batch.is_empty() {
        return Err(PolicyError::EmptyBatch);
    }
    if returns.len() != traj.len() {
        return Err(PolicyError::Shape(format!("{} returns for {} samples", returns.len(), traj.len())));
    }
    let adv = advantages(traj, batch, returns, cfg.normalize_advantages);
    let n = batch.len() as f64;
    let mut grads = vec![0.0; params.len()];
    let (mut actor, mut critic, mut entropy) = (0.0, 0.0, 0.0);

    for (&i, &a) in batch.iter().zip(&adv) {
        let cache = params.forward_cached(&traj.states[i])?;
        let logp = log_softmax(&cache.logits);
        let p = cache.probs;
        let k = traj.actions[i].index();

        // d(objective)/d(log π(a|s)) for the actor term we maximise
        let d_obj_d_logp = match cfg.mode {
            LossMode::PpoClip => {
                let ratio = (logp[k] - traj.log_probs[i]).exp();
                let obj = clipped_objective(ratio, a, cfg.clip);
                actor -= obj / n;
                let unclipped = ratio * a;
                if unclipped <= obj { a * ratio } else { 0.0 }
            }
            LossMode::A2c => {
                actor -= logp[k] * a / n;
                a
            }
        };

        let h: f64 = -p.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
        entropy += h / n;

        let err = cache.value - returns[i];
        critic += cfg.value_coef * err * err / n;

        let mut dlogits = [0.0; NUM_ACTIONS];
        for j in 0..NUM_ACTIONS {
            let onehot = if j == k { 1.0 } else { 0.0 };
            // actor: −∂obj/∂logit_j
            let d_actor = -d_obj_d_logp * (onehot - p[j]);
            // entropy bonus: −c_e · ∂H/∂logit_j,  ∂H/∂logit_j = −p_j (log p_j + H)
            let d_ent = cfg.entropy_coef * p[j] * (logp[j] + h);
            dlogits[j] = (d_actor + d_ent) / n;
        }
        let dvalue = 2.0 * cfg.value_coef * err / n;
        params.backward(&cache, &dlogits, dvalue, &mut grads);
    }

    let loss = actor + critic - cfg.entropy_coef * entropy;
    if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
        return Err(PolicyError::NonFinite(format!(
            "loss {loss} (actor {actor}, critic {critic}, entropy {entropy}) over {} samples",
            batch.len()
        )));
    }
    Ok(LossOutput { loss, actor, critic, entropy, grads })
}
