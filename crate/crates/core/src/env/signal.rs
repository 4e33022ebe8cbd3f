use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::link::TransferStats;

/// Number of reals per signal vector.
pub const SIGNAL_DIM: usize = 4;

/// Per-MI observation available at the sender.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalVector {
    /// Derivative of the mean RTT with respect to time (s/s).
    pub rtt_gradient: f64,
    /// Mean RTT over the smallest mean RTT seen so far on this connection.
    pub rtt_ratio: f64,
    pub loss_rate: f64,
    /// Throughput divided by the capacity scale.
    pub mean_throughput: f64,
}

impl SignalVector {
    pub fn to_array(&self) -> [f64; SIGNAL_DIM] {
        [self.rtt_gradient, self.rtt_ratio, self.loss_rate, self.mean_throughput]
    }
}

/// Builds the signal vector for one MI.
///
/// `prev_mean_rtt` is `None` on the first MI of a connection, which gives a
/// zero gradient.
pub fn build_signal(
    stats: &TransferStats,
    prev_mean_rtt: Option<f64>,
    min_mean_rtt: f64,
    mi_duration: f64,
    capacity_scale: f64,
) -> Result<SignalVector, EnvError> {
    if !(min_mean_rtt > 0.0 && mi_duration > 0.0 && capacity_scale > 0.0) {
        return Err(EnvError::InvalidSignalInput(format!(
            "min rtt {min_mean_rtt}, mi duration {mi_duration} and capacity scale {capacity_scale} must be positive"
        )));
    }
    let rtt = stats.mean_rtt;
    let rtt_gradient = prev_mean_rtt.map_or(0.0, |prev| (rtt - prev) / mi_duration);
    let sv = SignalVector {
        rtt_gradient,
        rtt_ratio: rtt / min_mean_rtt.min(rtt),
        loss_rate: stats.loss_rate,
        mean_throughput: stats.throughput / capacity_scale,
    };
    if !sv.to_array().iter().all(|v| v.is_finite()) {
        return Err(EnvError::InvalidSignalInput(format!("non-finite signal {sv:?}")));
    }
    Ok(sv)
}

/// Fixed-length history of signal vectors, newest last, zero-padded.
#[derive(Debug, Clone, PartialEq)]
pub struct StateWindow {
    history: VecDeque<SignalVector>,
    len: usize,
}

impl StateWindow {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "history length must be at least 1");
        StateWindow { history: std::iter::repeat_n(SignalVector::default(), len).collect(), len }
    }

    pub fn push(&mut self, sv: SignalVector) {
        self.history.pop_front();
        self.history.push_back(sv);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn latest(&self) -> &SignalVector {
        self.history.back().expect("window never empty")
    }

    pub fn iter(&self) -> impl Iterator<Item = &SignalVector> {
        self.history.iter()
    }

    /// Oldest first, `len × 4` reals.
    pub fn flatten(&self) -> Vec<f64> {
        self.history.iter().flat_map(|s| s.to_array()).collect()
    }
}

/// Turns a stream of per-MI stats into signal vectors and keeps the window.
#[derive(Debug, Clone)]
pub struct SignalTracker {
    window: StateWindow,
    prev_rtt: Option<f64>,
    min_rtt: Option<f64>,
    mi_duration: f64,
    capacity_scale: f64,
}

impl SignalTracker {
    pub fn new(history_len: usize, mi_duration: f64, capacity_scale: f64) -> Self {
        SignalTracker {
            window: StateWindow::new(history_len),
            prev_rtt: None,
            min_rtt: None,
            mi_duration,
            capacity_scale,
        }
    }

    pub fn reset(&mut self) {
        self.window = StateWindow::new(self.window.len());
        self.prev_rtt = None;
        self.min_rtt = None;
    }

    pub fn observe(&mut self, stats: &TransferStats) -> Result<SignalVector, EnvError> {
        let min = self.min_rtt.map_or(stats.mean_rtt, |m| m.min(stats.mean_rtt));
        let sv = build_signal(stats, self.prev_rtt, min, self.mi_duration, self.capacity_scale)?;
        self.prev_rtt = Some(stats.mean_rtt);
        self.min_rtt = Some(min);
        self.window.push(sv);
        Ok(sv)
    }

    pub fn window(&self) -> &StateWindow {
        &self.window
    }
}
