use serde::{Deserialize, Serialize};

/// Constants of the utility `U(n, T, L) = T / K^n − T·L·B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityParams {
    /// Per-stream cost base `K` (> 1).
    pub k_base: f64,
    /// Loss punishment weight `B` (≥ 0).
    pub b_penalty: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        UtilityParams { k_base: 1.02, b_penalty: 2.0 }
    }
}

impl UtilityParams {
    pub fn is_valid(&self) -> bool {
        self.k_base > 1.0 && self.b_penalty >= 0.0 && self.k_base.is_finite() && self.b_penalty.is_finite()
    }
}

pub fn utility(n: u32, throughput: f64, loss: f64, params: &UtilityParams) -> f64 {
    debug_assert!(throughput >= 0.0);
    debug_assert!((0.0..1.0).contains(&loss));
    throughput / params.k_base.powi(n as i32) - throughput * loss * params.b_penalty
}

/// Three-valued reward on the change in utility between successive MIs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Dead-zone half width in utility units.
    pub epsilon: f64,
    pub pos_reward: f64,
    pub neg_reward: f64,
}

impl RewardParams {
    /// Dead zone of 0.5% of the throughput scale, rewards of ±1.
    pub fn for_scale(capacity_scale: f64) -> Self {
        RewardParams { epsilon: 0.005 * capacity_scale, pos_reward: 1.0, neg_reward: -1.0 }
    }

    pub fn is_valid(&self) -> bool {
        self.epsilon >= 0.0 && self.pos_reward > 0.0 && self.neg_reward < 0.0
    }
}

impl Default for RewardParams {
    fn default() -> Self {
        Self::for_scale(1000.0)
    }
}

pub fn reward(u_curr: f64, u_prev: f64, params: &RewardParams) -> f64 {
    let delta = u_curr - u_prev;
    if delta > params.epsilon {
        params.pos_reward
    } else if delta < -params.epsilon {
        params.neg_reward
    } else {
        0.0
    }
}
