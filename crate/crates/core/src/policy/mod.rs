//! Actor-critic policy learning with a clipped surrogate objective.
//!
//! The network, its gradients and the optimizer are written out by hand;
//! see [`net`] for the layout and [`ppo`] for the loss.

mod adam;
mod agent;
pub mod net;
mod persist;
pub mod ppo;
mod train;

use thiserror::Error;

pub use adam::{clip_grad_norm, Adam};
pub use agent::PolicyAgent;
pub use net::{PolicyDims, PolicyParams, NUM_ACTIONS};
pub use persist::{decode_policy, encode_policy, load_policy, load_policy_for, save_policy, FORMAT_VERSION};
pub use ppo::{
    clipped_objective, discounted_returns, greedy_action, ppo_loss, sample_action, LossConfig, LossMode, LossOutput,
    Trajectory,
};
pub use train::{
    rollout, save_train_log, smoothed_return, train, write_train_log, TrainConfig, TrainError, TrainFailure,
    TrainLogEntry, TrainOutcome,
};

use crate::env::{StateWindow, SIGNAL_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("not a probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("policy file: {0}")]
    Format(String),
    #[error("policy file version {found}, this build reads version {expected}")]
    Version { found: u32, expected: u32 },
    #[error("policy expects {found} inputs but the environment provides {expected}")]
    DimensionMismatch { found: usize, expected: usize },
    #[error("io: {0}")]
    Io(String),
}

/// Per-feature input scaling: RTT gradient, RTT ratio, loss rate, throughput.
///
/// Raw RTT gradients and loss rates are in the 1e-3..1e-2 range; scaling
/// them by 100 puts every feature on a comparable order of magnitude.
pub const FEATURE_SCALE: [f64; SIGNAL_DIM] = [100.0, 1.0, 100.0, 1.0];

/// Flattens the window (oldest first) into network input.
pub fn encode_state(window: &StateWindow) -> Vec<f64> {
    window
        .iter()
        .flat_map(|s| {
            let a = s.to_array();
            std::array::from_fn::<f64, SIGNAL_DIM, _>(|i| a[i] * FEATURE_SCALE[i])
        })
        .collect()
}
