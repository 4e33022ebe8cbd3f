//! Central-difference gradient ascent on the stream count.
//!
//! The optimizer alternates probes at `n + δ` and `n − δ`, estimates the
//! utility gradient from the pair and moves the centre. The move size is
//! the step times the utility elasticity `g·n/U`, rounded, at least one
//! stream and at most `floor(step)` streams. Every reversal of direction
//! shrinks the step multiplicatively down to one stream.

use serde::{Deserialize, Serialize};

use super::{ConcurrencyOptimizer, Observation, OptimizerDecision, OptimizerError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdParams {
    /// Probe offset δ in streams.
    pub delta: u32,
    pub initial_step: f64,
    /// Factor applied to the step after a direction reversal.
    pub decay: f64,
    pub min_step: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub initial_streams: u32,
}

impl Default for GdParams {
    fn default() -> Self {
        GdParams { delta: 1, initial_step: 1.0, decay: 0.5, min_step: 1.0, n_min: 1, n_max: 64, initial_streams: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    ProbeUp,
    ProbeDown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientDescent {
    params: GdParams,
    center: u32,
    step: f64,
    phase: Phase,
    up: (u32, f64),
    last_move: i64,
}

impl GradientDescent {
    pub fn new(params: GdParams) -> Self {
        let step = params.initial_step.max(params.min_step).max(1.0);
        GradientDescent {
            center: params.initial_streams.clamp(params.n_min, params.n_max),
            params,
            step,
            phase: Phase::ProbeUp,
            up: (0, 0.0),
            last_move: 0,
        }
    }

    pub fn center(&self) -> u32 {
        self.center
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    fn clamp(&self, n: i64) -> u32 {
        n.clamp(self.params.n_min as i64, self.params.n_max as i64) as u32
    }

    fn probe_up(&self) -> u32 {
        self.clamp(self.center as i64 + self.params.delta as i64)
    }

    fn probe_down(&self) -> u32 {
        self.clamp(self.center as i64 - self.params.delta as i64)
    }

    /// Feeds the utility measured at the last probe and returns the next decision.
    pub fn gd_step(&mut self, observed_utility: f64) -> OptimizerDecision {
        match self.phase {
            Phase::ProbeUp => {
                self.up = (self.probe_up(), observed_utility);
                self.phase = Phase::ProbeDown;
                OptimizerDecision::probe(self.probe_down())
            }
            Phase::ProbeDown => {
                let (n_up, u_up) = self.up;
                let (n_down, u_down) = (self.probe_down(), observed_utility);
                let mv = self.movement(n_up, u_up, n_down, u_down);
                if mv != 0 {
                    if self.last_move != 0 && mv.signum() != self.last_move.signum() {
                        self.step = (self.step * self.params.decay).max(self.params.min_step).max(1.0);
                    }
                    self.last_move = mv;
                }
                self.center = self.clamp(self.center as i64 + mv);
                self.phase = Phase::ProbeUp;
                OptimizerDecision::probe(self.probe_up())
            }
        }
    }

    fn movement(&self, n_up: u32, u_up: f64, n_down: u32, u_down: f64) -> i64 {
        if n_up == n_down {
            return 0;
        }
        let g = (u_up - u_down) / (n_up as f64 - n_down as f64);
        if g == 0.0 || !g.is_finite() {
            return 0;
        }
        let u_mid = 0.5 * (u_up + u_down);
        let elasticity = g * self.center as f64 / u_mid.abs().max(1e-9);
        let cap = self.step.floor().max(1.0);
        let size = (self.step * elasticity.abs()).round().clamp(1.0, cap);
        (g.signum() * size) as i64
    }
}

impl ConcurrencyOptimizer for GradientDescent {
    fn name(&self) -> &'static str {
        "gd"
    }

    fn start(&mut self) -> OptimizerDecision {
        *self = GradientDescent::new(self.params);
        OptimizerDecision::probe(self.probe_up())
    }

    fn observe(&mut self, obs: &Observation) -> Result<OptimizerDecision, OptimizerError> {
        if !obs.utility.is_finite() {
            return Err(OptimizerError::NonFiniteUtility(obs.utility));
        }
        Ok(self.gd_step(obs.utility))
    }
}
