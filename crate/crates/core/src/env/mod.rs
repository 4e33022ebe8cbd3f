//! The transfer MDP: one transfer on a simulated link, stepped one
//! monitoring interval per action.

mod action;
mod signal;
mod utility;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{apply_action, Action};
pub use signal::{build_signal, SignalTracker, SignalVector, StateWindow, SIGNAL_DIM};
pub use utility::{reward, utility, RewardParams, UtilityParams};

use crate::link::{Link, LinkError, LinkScenario, TransferStats};
use crate::seed::derive_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("invalid signal input: {0}")]
    InvalidSignalInput(String),
    #[error("step called on an inactive episode (reset first)")]
    EpisodeNotActive,
    #[error(transparent)]
    Link(#[from] LinkError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub history_len: usize,
    pub n_min: u32,
    pub n_max: u32,
    /// Monitoring intervals per episode.
    pub episode_len: usize,
    pub initial_streams: u32,
    pub utility: UtilityParams,
    pub reward: RewardParams,
    /// Throughput normaliser; defaults to the link capacity when `None`.
    pub capacity_scale: Option<f64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            history_len: 8,
            n_min: 1,
            n_max: 64,
            episode_len: 20,
            initial_streams: 2,
            utility: UtilityParams::default(),
            reward: RewardParams::default(),
            capacity_scale: None,
        }
    }
}

impl EnvConfig {
    /// Defaults with the reward dead zone sized for a link of `capacity` Mbps.
    pub fn for_capacity(capacity: f64) -> Self {
        EnvConfig { reward: RewardParams::for_scale(capacity), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        if self.history_len == 0 {
            return bad("history_len must be >= 1".into());
        }
        if !(1 <= self.n_min && self.n_min <= self.initial_streams && self.initial_streams <= self.n_max) {
            return bad(format!(
                "need 1 <= n_min ({}) <= initial_streams ({}) <= n_max ({})",
                self.n_min, self.initial_streams, self.n_max
            ));
        }
        if self.episode_len == 0 {
            return bad("episode_len must be >= 1".into());
        }
        if !self.utility.is_valid() {
            return bad(format!("utility params invalid: {:?}", self.utility));
        }
        if !self.reward.is_valid() {
            return bad(format!("reward params invalid: {:?}", self.reward));
        }
        if let Some(s) = self.capacity_scale {
            if !(s > 0.0) {
                return bad(format!("capacity_scale must be positive, got {s}"));
            }
        }
        Ok(())
    }

    pub fn apply(&self, n: u32, action: Action) -> u32 {
        apply_action(n, action, self.n_min, self.n_max)
    }

    pub fn capacity_scale_for(&self, scenario: &LinkScenario) -> f64 {
        self.capacity_scale.unwrap_or(scenario.capacity)
    }

    /// Flattened state length seen by a policy.
    pub fn state_dim(&self) -> usize {
        self.history_len * SIGNAL_DIM
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: StateWindow,
    pub reward: f64,
    pub done: bool,
    pub info: TransferStats,
    pub utility: f64,
}

/// A single transfer running on its own simulated link.
#[derive(Debug, Clone)]
pub struct TransferEnv {
    cfg: EnvConfig,
    scenario: LinkScenario,
    master_seed: u64,
    next_episode: u64,
    link: Link,
    tracker: SignalTracker,
    streams: u32,
    prev_utility: Option<f64>,
    steps: usize,
    active: bool,
}

impl TransferEnv {
    pub fn new(scenario: LinkScenario, cfg: EnvConfig, master_seed: u64) -> Result<Self, EnvError> {
        cfg.validate()?;
        let link = Link::with_seed(scenario.clone(), derive_seed(master_seed, 0))?;
        let tracker = SignalTracker::new(cfg.history_len, scenario.mi_duration, cfg.capacity_scale_for(&scenario));
        Ok(TransferEnv {
            streams: cfg.initial_streams,
            cfg,
            scenario,
            master_seed,
            next_episode: 0,
            link,
            tracker,
            prev_utility: None,
            steps: 0,
            active: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn scenario(&self) -> &LinkScenario {
        &self.scenario
    }

    pub fn streams(&self) -> u32 {
        self.streams
    }

    pub fn state(&self) -> &StateWindow {
        self.tracker.window()
    }

    /// Starts the next episode.
    pub fn reset(&mut self) -> StateWindow {
        let ep = self.next_episode;
        self.reset_episode(ep)
    }

    /// Starts episode `episode`; the link seed is derived from the master
    /// seed and the episode index.
    pub fn reset_episode(&mut self, episode: u64) -> StateWindow {
        self.link = Link::with_seed(self.scenario.clone(), derive_seed(self.master_seed, episode))
            .expect("scenario validated at construction");
        self.tracker.reset();
        self.streams = self.cfg.initial_streams;
        self.prev_utility = None;
        self.steps = 0;
        self.active = true;
        self.next_episode = episode + 1;
        self.tracker.window().clone()
    }

    /// Applies `action`, runs one MI and scores it against the previous MI.
    ///
    /// The first MI of an episode has no predecessor and earns zero reward.
    pub fn step(&mut self, action: Action) -> Result<Step, EnvError> {
        if !self.active {
            return Err(EnvError::EpisodeNotActive);
        }
        self.streams = self.cfg.apply(self.streams, action);
        let info = self.link.step_single(self.streams);
        self.tracker.observe(&info)?;
        let u = utility(self.streams, info.throughput, info.loss_rate, &self.cfg.utility);
        let r = self.prev_utility.map_or(0.0, |prev| reward(u, prev, &self.cfg.reward));
        self.prev_utility = Some(u);
        self.steps += 1;
        let done = self.steps >= self.cfg.episode_len;
        if done {
            self.active = false;
        }
        Ok(Step { state: self.tracker.window().clone(), reward: r, done, info, utility: u })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_env(initial: u32) -> TransferEnv {
        let cfg = EnvConfig { initial_streams: initial, ..EnvConfig::default() };
        TransferEnv::new(LinkScenario::throttled_1g().with_noise(0.0), cfg, 3).unwrap()
    }

    #[test]
    fn hold_on_quiet_link_earns_nothing() {
        let mut env = quiet_env(2);
        env.reset();
        assert_eq!(env.step(Action::Hold).unwrap().reward, 0.0);
        assert_eq!(env.step(Action::Hold).unwrap().reward, 0.0);
    }

    #[test]
    fn climbing_to_the_optimum_pays_and_overshooting_costs() {
        let mut env = quiet_env(15);
        env.reset();
        env.step(Action::Hold).unwrap();
        let s = env.step(Action::Up5).unwrap();
        assert_eq!(env.streams(), 20);
        assert_eq!(s.reward, 1.0);

        let mut env = quiet_env(20);
        env.reset();
        env.step(Action::Hold).unwrap();
        assert_eq!(env.step(Action::Up5).unwrap().reward, -1.0);
    }

    #[test]
    fn reset_is_deterministic_and_padded() {
        let mut a = quiet_env(2);
        let mut b = quiet_env(2);
        let wa = a.reset_episode(7);
        let wb = b.reset_episode(7);
        assert_eq!(wa, wb);
        assert_eq!(wa.len(), 8);
        assert_eq!(wa.flatten(), vec![0.0; 32]);
        let s = a.step(Action::Up1).unwrap();
        assert_eq!(s.state.latest().rtt_gradient, 0.0);
    }

    #[test]
    fn episode_terminates() {
        let mut env = quiet_env(2);
        assert_eq!(env.step(Action::Hold), Err(EnvError::EpisodeNotActive));
        env.reset();
        for i in 0..20 {
            let s = env.step(Action::Up1).unwrap();
            assert_eq!(s.done, i == 19);
        }
        assert_eq!(env.step(Action::Hold), Err(EnvError::EpisodeNotActive));
    }

    #[test]
    fn invalid_config() {
        let cfg = EnvConfig { initial_streams: 0, ..EnvConfig::default() };
        assert!(TransferEnv::new(LinkScenario::throttled_1g(), cfg, 0).is_err());
        let cfg = EnvConfig { n_max: 1, ..EnvConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
