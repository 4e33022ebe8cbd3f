//! Background traffic: a piecewise-constant stream count driven by a
//! discrete Markov chain over a handful of load levels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LinkError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundProcess {
    /// No competing streams.
    None,
    /// Fixed number of competing streams for the whole run.
    Constant { streams: u32 },
    /// Markov chain over `levels`. While in level `i` the chain leaves with
    /// probability `1 / dwell[i]` per monitoring interval and jumps to a
    /// uniformly chosen other level.
    Markov {
        levels: Vec<u32>,
        dwell: Vec<f64>,
        #[serde(default)]
        initial_level: usize,
    },
}

impl Default for BackgroundProcess {
    fn default() -> Self {
        BackgroundProcess::None
    }
}

impl BackgroundProcess {
    /// The usual four-level chain `{0, low, mid, high}` with a shared dwell time.
    pub fn four_level(low: u32, mid: u32, high: u32, dwell: f64) -> Self {
        BackgroundProcess::Markov {
            levels: vec![0, low, mid, high],
            dwell: vec![dwell; 4],
            initial_level: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if let BackgroundProcess::Markov { levels, dwell, initial_level } = self {
            if levels.is_empty() || levels.len() != dwell.len() {
                return Err(LinkError::InvalidParameter(
                    "background levels and dwell times must be non-empty and of equal length".into(),
                ));
            }
            if dwell.iter().any(|d| !(d.is_finite() && *d >= 1.0)) {
                return Err(LinkError::InvalidParameter(
                    "background dwell times must be finite and >= 1 interval".into(),
                ));
            }
            if *initial_level >= levels.len() {
                return Err(LinkError::InvalidParameter(format!(
                    "initial background level {initial_level} out of range"
                )));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> BackgroundState {
        match self {
            BackgroundProcess::None => BackgroundState { level: 0, streams: 0 },
            BackgroundProcess::Constant { streams } => BackgroundState { level: 0, streams: *streams },
            BackgroundProcess::Markov { levels, initial_level, .. } => BackgroundState {
                level: *initial_level,
                streams: levels[*initial_level],
            },
        }
    }

    /// Stationary mean stream count, rounded to the nearest integer.
    ///
    /// With uniform jumps the stationary weight of a level is proportional
    /// to its dwell time.
    pub fn mean_streams(&self) -> u32 {
        match self {
            BackgroundProcess::None => 0,
            BackgroundProcess::Constant { streams } => *streams,
            BackgroundProcess::Markov { levels, dwell, .. } => {
                if levels.len() == 1 {
                    return levels[0];
                }
                let total: f64 = dwell.iter().sum();
                let mean: f64 = levels
                    .iter()
                    .zip(dwell)
                    .map(|(&l, &d)| l as f64 * d / total)
                    .sum();
                mean.round() as u32
            }
        }
    }

    pub fn advance<R: Rng + ?Sized>(&self, state: &mut BackgroundState, rng: &mut R) {
        let BackgroundProcess::Markov { levels, dwell, .. } = self else {
            return;
        };
        if levels.len() < 2 {
            return;
        }
        let leave: f64 = rng.random();
        if leave < 1.0 / dwell[state.level] {
            // pick among the other levels
            let mut next = rng.random_range(0..levels.len() - 1);
            if next >= state.level {
                next += 1;
            }
            state.level = next;
            state.streams = levels[next];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackgroundState {
    pub level: usize,
    pub streams: u32,
}
