//! Discrete-time model of a shared bottleneck link.
//!
//! Every monitoring interval (MI) the link splits its capacity max-min
//! fairly between all active streams (ours plus background). Each stream is
//! limited by the per-stream throttle and by the Mathis bound at the base
//! RTT and loss rate. When the offered load exceeds capacity the loss rate
//! and RTT inflate linearly in the overload ratio.

mod background;
mod mathis;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use background::{BackgroundProcess, BackgroundState};
pub use mathis::{aggregate_throughput, mathis_throughput, MathisParams, MATHIS_VALID_LOSS};

use crate::env::{utility, UtilityParams};
use crate::seed::derive_seed;

/// Identifier of a transfer sharing the link.
pub type TransferId = u32;

/// Simulated loss never reaches 1 so that loss stays a probability in `[0, 1)`.
pub const MAX_LOSS: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("mathis model undefined for loss rate {loss} (must be in (0, 1))")]
    Domain { loss: f64 },
    #[error("invalid link parameter: {0}")]
    InvalidParameter(String),
}

fn default_mss() -> f64 {
    1460.0
}
fn default_c() -> f64 {
    1.0
}
fn default_base_rtt() -> f64 {
    0.03
}
fn default_base_loss() -> f64 {
    1e-5
}
fn default_loss_slope() -> f64 {
    0.05
}
fn default_rtt_slope() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    0.02
}
fn default_mi() -> f64 {
    1.0
}

/// Static description of a link and the traffic that shares it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkScenario {
    /// Bottleneck capacity in Mbps.
    pub capacity: f64,
    /// Per-stream throttle in Mbps; `None` means unthrottled.
    #[serde(default)]
    pub per_stream_cap: Option<f64>,
    #[serde(default = "default_base_rtt")]
    pub base_rtt: f64,
    #[serde(default = "default_base_loss")]
    pub base_loss: f64,
    #[serde(default = "default_loss_slope")]
    pub loss_slope: f64,
    #[serde(default = "default_rtt_slope")]
    pub rtt_slope: f64,
    #[serde(default)]
    pub background: BackgroundProcess,
    /// Relative standard deviation of the per-transfer throughput noise.
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    /// Seconds per monitoring interval.
    #[serde(default = "default_mi")]
    pub mi_duration: f64,
    #[serde(default = "default_mss")]
    pub mss: f64,
    #[serde(default = "default_c")]
    pub c_const: f64,
}

impl LinkScenario {
    /// Link with the default loss/RTT model and no background traffic.
    pub fn new(capacity: f64, per_stream_cap: Option<f64>) -> Self {
        LinkScenario {
            capacity,
            per_stream_cap,
            base_rtt: default_base_rtt(),
            base_loss: default_base_loss(),
            loss_slope: default_loss_slope(),
            rtt_slope: default_rtt_slope(),
            background: BackgroundProcess::None,
            noise_std: default_noise(),
            seed: 0,
            mi_duration: default_mi(),
            mss: default_mss(),
            c_const: default_c(),
        }
    }

    /// 1 Gbps link with every stream throttled to 50 Mbps; twenty streams fill it.
    pub fn throttled_1g() -> Self {
        Self::new(1000.0, Some(50.0))
    }

    /// 10 Gbps link without a throttle and a 5 ms base RTT, where a single
    /// stream is held back by the Mathis bound.
    pub fn uncapped_10g() -> Self {
        LinkScenario { base_rtt: 0.005, ..Self::new(10_000.0, None) }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn with_background(mut self, background: BackgroundProcess) -> Self {
        self.background = background;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Noise removed and the background chain frozen at its stationary mean.
    pub fn noiseless_frozen(&self) -> Self {
        let mut s = self.clone();
        s.noise_std = 0.0;
        s.background = match self.background.mean_streams() {
            0 => BackgroundProcess::None,
            n => BackgroundProcess::Constant { streams: n },
        };
        s
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |msg: String| Err(LinkError::InvalidParameter(msg));
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return bad(format!("capacity must be positive, got {}", self.capacity));
        }
        if let Some(cap) = self.per_stream_cap {
            if !(cap > 0.0) {
                return bad(format!("per-stream cap must be positive, got {cap}"));
            }
        }
        if !(0.0..1.0).contains(&self.base_loss) {
            return bad(format!("base loss must be in [0, 1), got {}", self.base_loss));
        }
        if !(self.base_rtt > 0.0) {
            return bad(format!("base rtt must be positive, got {}", self.base_rtt));
        }
        if !(self.loss_slope >= 0.0 && self.rtt_slope >= 0.0) {
            return bad("loss and rtt slopes must be non-negative".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise std must be non-negative, got {}", self.noise_std));
        }
        if !(self.mi_duration > 0.0) {
            return bad(format!("mi duration must be positive, got {}", self.mi_duration));
        }
        MathisParams { mss: self.mss, rtt: self.base_rtt, c_const: self.c_const }.validate()?;
        self.background.validate()
    }

    /// Rate one stream can reach on an idle link: the throttle or the
    /// Mathis bound at base RTT and base loss, whichever is lower.
    pub fn effective_stream_cap(&self) -> f64 {
        let mathis = if self.base_loss > 0.0 {
            let p = MathisParams { mss: self.mss, rtt: self.base_rtt, c_const: self.c_const };
            mathis_throughput(&p, self.base_loss).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        };
        self.per_stream_cap.map_or(mathis, |cap| cap.min(mathis))
    }

    /// Stream count at which the offered load equals capacity.
    pub fn saturation_streams(&self) -> f64 {
        self.capacity / self.effective_stream_cap()
    }
}

/// Evolving condition of the link after a monitoring interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub mi_index: u64,
    pub active_transfers: Vec<(TransferId, u32)>,
    pub bg_streams: u32,
    /// Demanded bandwidth in Mbps.
    pub offered_load: f64,
    pub loss_rate: f64,
    pub current_rtt: f64,
}

/// What one transfer observed during a monitoring interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferStats {
    /// Mbps.
    pub throughput: f64,
    pub loss_rate: f64,
    pub stream_count: u32,
    /// Seconds.
    pub mean_rtt: f64,
    /// Retransmitted segments during the interval.
    pub retransmissions: u64,
}

/// A running link: scenario, state and the generators it owns.
///
/// Background traffic and measurement noise draw from separate generators,
/// so the background realisation depends only on the seed and never on what
/// the transfers do.
#[derive(Debug, Clone)]
pub struct Link {
    scenario: LinkScenario,
    state: LinkState,
    bg: BackgroundState,
    noise_rng: ChaCha8Rng,
    bg_rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Link {
    pub fn new(scenario: LinkScenario) -> Result<Self, LinkError> {
        let seed = scenario.seed;
        Self::with_seed(scenario, seed)
    }

    pub fn with_seed(scenario: LinkScenario, seed: u64) -> Result<Self, LinkError> {
        scenario.validate()?;
        let bg = scenario.background.initial_state();
        let noise = if scenario.noise_std > 0.0 {
            Some(Normal::new(0.0, scenario.noise_std).map_err(|e| LinkError::InvalidParameter(e.to_string()))?)
        } else {
            None
        };
        let state = LinkState {
            mi_index: 0,
            active_transfers: Vec::new(),
            bg_streams: bg.streams,
            offered_load: 0.0,
            loss_rate: scenario.base_loss,
            current_rtt: scenario.base_rtt,
        };
        Ok(Link {
            noise_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6e6f_6973)),
            bg_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6267_7466)),
            scenario,
            state,
            bg,
            noise,
        })
    }

    pub fn scenario(&self) -> &LinkScenario {
        &self.scenario
    }

    pub fn state(&self) -> &LinkState {
        &self.state
    }

    pub fn bg_streams(&self) -> u32 {
        self.bg.streams
    }

    /// Advances one monitoring interval with the given per-transfer stream counts.
    pub fn step(&mut self, stream_counts: &BTreeMap<TransferId, u32>) -> BTreeMap<TransferId, TransferStats> {
        let sc = &self.scenario;
        let bg_streams = self.bg.streams;
        let ours: u64 = stream_counts.values().map(|&n| n as u64).sum();
        let total = ours + bg_streams as u64;

        let (per_stream, offered, loss, rtt) = if total == 0 {
            (0.0, 0.0, sc.base_loss, sc.base_rtt)
        } else {
            let s = total as f64;
            let stream_cap = sc.effective_stream_cap();
            let fair = sc.capacity / s;
            let per_stream = stream_cap.min(fair);
            let offered = if stream_cap.is_finite() { s * stream_cap } else { s * fair };
            let overload = (offered / sc.capacity - 1.0).max(0.0);
            let loss = (sc.base_loss + sc.loss_slope * overload).min(MAX_LOSS);
            let rtt = sc.base_rtt * (1.0 + sc.rtt_slope * overload);
            (per_stream, offered, loss, rtt)
        };

        let noise_bound = 6.0 * sc.noise_std;
        let segment_bits = sc.mss * 8.0;
        let mut out = BTreeMap::new();
        for (&id, &n) in stream_counts {
            let eta = match &self.noise {
                Some(d) => d.sample(&mut self.noise_rng).clamp(-noise_bound, noise_bound),
                None => 0.0,
            };
            let throughput = (n as f64 * per_stream * (1.0 - loss) * (1.0 + eta)).max(0.0);
            let retransmissions = (throughput * 1e6 * sc.mi_duration * loss / segment_bits).round() as u64;
            out.insert(
                id,
                TransferStats { throughput, loss_rate: loss, stream_count: n, mean_rtt: rtt, retransmissions },
            );
        }

        self.state = LinkState {
            mi_index: self.state.mi_index + 1,
            active_transfers: stream_counts.iter().map(|(&k, &v)| (k, v)).collect(),
            bg_streams,
            offered_load: offered,
            loss_rate: loss,
            current_rtt: rtt,
        };
        self.scenario.background.advance(&mut self.bg, &mut self.bg_rng);
        out
    }

    /// Convenience for a single transfer with id 0.
    pub fn step_single(&mut self, streams: u32) -> TransferStats {
        let counts = BTreeMap::from([(0, streams)]);
        self.step(&counts)[&0]
    }
}

/// Noiseless statistics of a lone transfer using `n` streams, background
/// frozen at its mean.
pub fn steady_state_stats(scenario: &LinkScenario, n: u32) -> Result<TransferStats, LinkError> {
    let mut link = Link::with_seed(scenario.noiseless_frozen(), 0)?;
    Ok(link.step_single(n))
}

/// Brute-force argmax of the utility over `n ∈ [1, n_max]` on the noiseless
/// link. Ties go to the smaller stream count.
pub fn optimal_concurrency(scenario: &LinkScenario, util: &UtilityParams, n_max: u32) -> Result<u32, LinkError> {
    let frozen = scenario.noiseless_frozen();
    frozen.validate()?;
    let mut best = (1, f64::NEG_INFINITY);
    for n in 1..=n_max.max(1) {
        let mut link = Link::with_seed(frozen.clone(), 0)?;
        let st = link.step_single(n);
        let u = utility(n, st.throughput, st.loss_rate, util);
        if u > best.1 {
            best = (n, u);
        }
    }
    Ok(best.0)
}
