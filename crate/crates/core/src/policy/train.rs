//! The episodic actor-critic training loop.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adam::{clip_grad_norm, Adam};
use super::net::{PolicyDims, PolicyParams};
use super::ppo::{discounted_returns, ppo_loss, sample_action, LossConfig, LossMode, Trajectory};
use super::{encode_state, PolicyError};
use crate::env::{EnvError, TransferEnv};
use crate::seed::derive_seed;

const INIT_STREAM: u64 = 0x696e_6974;
const SAMPLE_STREAM: u64 = 0x7361_6d70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Samples per gradient step; 0 uses the whole rollout batch.
    pub minibatch: usize,
    /// Episodes collected before each update.
    pub rollouts_per_update: usize,
    pub mode: LossMode,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub normalize_advantages: bool,
    pub max_grad_norm: Option<f64>,
    pub hidden: Vec<usize>,
    pub shared_trunk: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 1000,
            gamma: 0.99,
            lr: 3e-4,
            epochs: 4,
            minibatch: 0,
            rollouts_per_update: 1,
            mode: LossMode::PpoClip,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            normalize_advantages: true,
            max_grad_norm: Some(0.5),
            hidden: vec![64, 64],
            shared_trunk: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            mode: self.mode,
            clip: self.clip,
            entropy_coef: self.entropy_coef,
            value_coef: self.value_coef,
            normalize_advantages: self.normalize_advantages,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: String| Err(PolicyError::Config(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad(format!("clip ratio must be in (0, 1), got {}", self.clip));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.epochs == 0 || self.rollouts_per_update == 0 {
            return bad("epochs and rollouts_per_update must be >= 1".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden layer sizes must be non-empty and positive: {:?}", self.hidden));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogEntry {
    pub episode: u64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub wall_ms: u64,
}

impl TrainLogEntry {
    /// Everything except wall-clock time, which differs between runs.
    pub fn deterministic_part(&self) -> (u64, f64, f64, f64, f64) {
        (self.episode, self.episode_return, self.actor_loss, self.critic_loss, self.entropy)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub log: Vec<TrainLogEntry>,
}

#[derive(Debug, Error)]
#[error("training aborted after {} episodes: {source}", partial_log.len())]
pub struct TrainError {
    pub source: TrainFailure,
    pub partial_log: Vec<TrainLogEntry>,
}

#[derive(Debug, Error)]
pub enum TrainFailure {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Runs one episode with the stochastic policy.
pub fn rollout(
    env: &mut TransferEnv,
    params: &PolicyParams,
    episode: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory, TrainFailure> {
    let mut traj = Trajectory::default();
    let mut state = encode_state(&env.reset_episode(episode));
    loop {
        let (probs, value) = params.forward(&state)?;
        let (action, log_prob) = sample_action(&probs, rng)?;
        let step = env.step(action)?;
        let next = encode_state(&step.state);
        traj.push(std::mem::replace(&mut state, next), action, step.reward, log_prob, value);
        if step.done {
            traj.terminal = true;
            return Ok(traj);
        }
    }
}

/// Trains an actor-critic policy for `cfg.episodes` episodes.
///
/// `make_env(episode)` supplies the environment for each episode; the
/// episode is started with `reset_episode(episode)`. Passing `init`
/// continues from existing weights (fine-tuning).
pub fn train<F>(mut make_env: F, cfg: &TrainConfig, init: Option<PolicyParams>) -> Result<TrainOutcome, TrainError>
where
    F: FnMut(u64) -> Result<TransferEnv, EnvError>,
{
    let fail = |source: TrainFailure, log: &[TrainLogEntry]| TrainError { source, partial_log: log.to_vec() };
    let mut log: Vec<TrainLogEntry> = Vec::with_capacity(cfg.episodes);
    cfg.validate().map_err(|e| fail(e.into(), &log))?;

    let mut params = match init {
        Some(p) => p,
        None => {
            let env = make_env(0).map_err(|e| fail(e.into(), &log))?;
            let dims = PolicyDims::new(env.config().state_dim(), cfg.hidden.clone(), cfg.shared_trunk);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, INIT_STREAM));
            PolicyParams::init(dims, &mut rng).map_err(|e| fail(e.into(), &log))?
        }
    };
    if cfg.episodes == 0 {
        return Ok(TrainOutcome { params, log });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SAMPLE_STREAM));
    let mut adam = Adam::new(params.len());
    let loss_cfg = cfg.loss_config();
    let started = Instant::now();

    let mut episode = 0u64;
    while (episode as usize) < cfg.episodes {
        let n_roll = cfg.rollouts_per_update.min(cfg.episodes - episode as usize);
        let mut batch = Trajectory::default();
        let mut returns = Vec::new();
        let mut ep_returns = Vec::with_capacity(n_roll);
        for k in 0..n_roll as u64 {
            let ep = episode + k;
            let mut env = make_env(ep).map_err(|e| fail(e.into(), &log))?;
            let traj = rollout(&mut env, &params, ep, &mut rng).map_err(|e| fail(e, &log))?;
            ep_returns.push(traj.total_reward());
            returns.extend(discounted_returns(&traj.rewards, cfg.gamma));
            batch.extend(traj);
        }

        let mb = if cfg.minibatch == 0 { batch.len() } else { cfg.minibatch.min(batch.len()) };
        let mut idx: Vec<usize> = (0..batch.len()).collect();
        let (mut a_sum, mut c_sum, mut h_sum, mut count) = (0.0, 0.0, 0.0, 0usize);
        for _ in 0..cfg.epochs {
            idx.shuffle(&mut rng);
            for chunk in idx.chunks(mb) {
                let out = ppo_loss(&params, &batch, chunk, &returns, &loss_cfg)
                    .map_err(|e| fail(e.into(), &log))?;
                let mut grads = out.grads;
                if let Some(max) = cfg.max_grad_norm {
                    clip_grad_norm(&mut grads, max);
                }
                adam.update(&mut params, &grads, cfg.lr).map_err(|e| fail(e.into(), &log))?;
                a_sum += out.actor;
                c_sum += out.critic;
                h_sum += out.entropy;
                count += 1;
            }
        }
        let c = count.max(1) as f64;
        for (k, r) in ep_returns.into_iter().enumerate() {
            log.push(TrainLogEntry {
                episode: episode + k as u64,
                episode_return: r,
                actor_loss: a_sum / c,
                critic_loss: c_sum / c,
                entropy: h_sum / c,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
        if episode % 100 == 0 {
            log::debug!("episode {episode}: return {:.2}", log.last().map_or(0.0, |e| e.episode_return));
        }
        episode += n_roll as u64;
    }
    Ok(TrainOutcome { params, log })
}

/// Mean of the last `window` episode returns.
pub fn smoothed_return(log: &[TrainLogEntry], window: usize) -> Option<f64> {
    if log.is_empty() || window == 0 {
        return None;
    }
    let tail = &log[log.len().saturating_sub(window)..];
    Some(tail.iter().map(|e| e.episode_return).sum::<f64>() / tail.len() as f64)
}

pub fn write_train_log<W: Write>(out: W, log: &[TrainLogEntry]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["episode", "return", "actor_loss", "critic_loss", "entropy", "wall_ms"])?;
    for e in log {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_train_log(path: &Path, log: &[TrainLogEntry]) -> Result<(), csv::Error> {
    write_train_log(std::fs::File::create(path)?, log)
}
