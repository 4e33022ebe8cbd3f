use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::PolicyParams;
use super::ppo::{greedy_action, sample_action};
use super::{encode_state, PolicyError};
use crate::baseline::{ConcurrencyOptimizer, Observation, OptimizerDecision, OptimizerError};
use crate::env::{EnvConfig, SignalTracker};

/// A trained policy driving a transfer through the optimizer interface.
#[derive(Debug, Clone)]
pub struct PolicyAgent {
    params: PolicyParams,
    tracker: SignalTracker,
    n_min: u32,
    n_max: u32,
    initial: u32,
    streams: u32,
    greedy: bool,
    rng: ChaCha8Rng,
}

impl PolicyAgent {
    /// `greedy` picks the most likely action instead of sampling.
    pub fn new(
        params: PolicyParams,
        cfg: &EnvConfig,
        mi_duration: f64,
        capacity_scale: f64,
        greedy: bool,
        seed: u64,
    ) -> Result<Self, PolicyError> {
        if params.input_dim() != cfg.state_dim() {
            return Err(PolicyError::DimensionMismatch { found: params.input_dim(), expected: cfg.state_dim() });
        }
        Ok(PolicyAgent {
            params,
            tracker: SignalTracker::new(cfg.history_len, mi_duration, capacity_scale),
            n_min: cfg.n_min,
            n_max: cfg.n_max,
            initial: cfg.initial_streams,
            streams: cfg.initial_streams,
            greedy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl ConcurrencyOptimizer for PolicyAgent {
    fn name(&self) -> &'static str {
        "rl"
    }

    fn start(&mut self) -> OptimizerDecision {
        self.tracker.reset();
        self.streams = self.initial;
        OptimizerDecision::set(self.streams)
    }

    fn observe(&mut self, obs: &Observation) -> Result<OptimizerDecision, OptimizerError> {
        self.tracker.observe(&obs.stats).map_err(|e| OptimizerError::Policy(e.to_string()))?;
        let state = encode_state(self.tracker.window());
        let (probs, _) = self.params.forward(&state).map_err(|e| OptimizerError::Policy(e.to_string()))?;
        let action = if self.greedy {
            greedy_action(&probs)
        } else {
            sample_action(&probs, &mut self.rng).map_err(|e| OptimizerError::Policy(e.to_string()))?.0
        };
        self.streams = crate::env::apply_action(obs.streams, action, self.n_min, self.n_max);
        Ok(OptimizerDecision { next_stream_count: self.streams, probe: false, action: Some(action) })
    }
}
