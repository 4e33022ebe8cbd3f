//! Online concurrency optimizers that share one decision-per-MI interface.
//!
//! Every optimizer (the learned policy included, see
//! [`crate::policy::PolicyAgent`]) is asked for a stream count before the
//! first monitoring interval and after every interval it observes.

mod bo;
mod gd;
mod gp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bo::{BayesOpt, BoParams};
pub use gd::{GdParams, GradientDescent};
pub use gp::{expected_improvement, GaussianProcess, GpError};

use crate::env::Action;
use crate::link::TransferStats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("policy inference failed: {0}")]
    Policy(String),
    #[error("non-finite utility {0}")]
    NonFiniteUtility(f64),
}

/// Stream count to use for the next monitoring interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerDecision {
    pub next_stream_count: u32,
    /// The interval is an exploratory probe rather than the current best guess.
    pub probe: bool,
    /// Discrete action when the decision came from the learned policy.
    pub action: Option<Action>,
}

impl OptimizerDecision {
    pub fn set(n: u32) -> Self {
        OptimizerDecision { next_stream_count: n, probe: false, action: None }
    }

    pub fn probe(n: u32) -> Self {
        OptimizerDecision { next_stream_count: n, probe: true, action: None }
    }

    /// Short label for traces.
    pub fn label(&self) -> &'static str {
        match (self.action, self.probe) {
            (Some(a), _) => a.name(),
            (None, true) => "probe",
            (None, false) => "set",
        }
    }
}

/// What a transfer's optimizer sees after one interval: only its own stats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Streams used during the interval.
    pub streams: u32,
    pub stats: TransferStats,
    pub utility: f64,
}

pub trait ConcurrencyOptimizer {
    fn name(&self) -> &'static str;

    /// Decision for the first interval of a transfer; also resets internal state.
    fn start(&mut self) -> OptimizerDecision;

    fn observe(&mut self, obs: &Observation) -> Result<OptimizerDecision, OptimizerError>;
}

/// Fixed single stream, the behaviour of a plain transfer tool.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoOptimizer;

/// Always one stream, never a probe.
pub fn no_opt_step() -> OptimizerDecision {
    OptimizerDecision::set(1)
}

impl ConcurrencyOptimizer for NoOptimizer {
    fn name(&self) -> &'static str {
        "none"
    }

    fn start(&mut self) -> OptimizerDecision {
        no_opt_step()
    }

    fn observe(&mut self, _obs: &Observation) -> Result<OptimizerDecision, OptimizerError> {
        Ok(no_opt_step())
    }
}
