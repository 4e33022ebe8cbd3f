//! Scenario files.
//!
//! A scenario is a TOML document with these sections, all optional except
//! `[link]`:
//!
//! ```toml
//! duration = 200          # monitoring intervals
//! seed = 7
//! output_dir = "out/run1" # relative to the working directory
//!
//! [link]                  # LinkScenario fields
//! capacity = 1000.0
//! per_stream_cap = 50.0
//! noise_std = 0.02
//! [link.background]
//! kind = "markov"
//! levels = [0, 10, 20, 30]
//! dwell = [20, 20, 20, 20]
//!
//! [env]                   # EnvConfig fields; [env.utility], [env.reward]
//! history_len = 8
//!
//! [transfer.1]
//! optimizer = "rl"        # rl | gd | bo | none
//! policy = "policy.bin"   # relative to the scenario file
//! start = 0
//! stop = 200              # defaults to duration
//! [transfer.2]
//! optimizer = "gd"
//! [transfer.2.gd]         # GdParams overrides
//! initial_step = 2.0
//!
//! [train]                 # TrainConfig fields
//! episodes = 1500
//!
//! [compare]
//! seeds = [0, 1, 2]
//! ```
//!
//! When `[env.reward]` is absent the reward dead zone is sized from the
//! link capacity. Stream bounds and the initial count of GD and BO come
//! from `[env]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::baseline::{BoParams, GdParams};
use crate::env::{EnvConfig, RewardParams};
use crate::link::{LinkScenario, TransferId};
use crate::policy::{PolicyParams, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Rl,
    Gd,
    Bo,
    None,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Rl => "rl",
            OptimizerKind::Gd => "gd",
            OptimizerKind::Bo => "bo",
            OptimizerKind::None => "none",
        }
    }
}

/// Where an RL transfer gets its weights.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    File(PathBuf),
    Loaded(Arc<PolicyParams>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerSpec {
    /// `greedy` takes the most likely action instead of sampling.
    Rl { policy: PolicySource, greedy: bool },
    Gd(GdParams),
    Bo(BoParams),
    None,
}

impl OptimizerSpec {
    pub fn kind(&self) -> OptimizerKind {
        match self {
            OptimizerSpec::Rl { .. } => OptimizerKind::Rl,
            OptimizerSpec::Gd(_) => OptimizerKind::Gd,
            OptimizerSpec::Bo(_) => OptimizerKind::Bo,
            OptimizerSpec::None => OptimizerKind::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSpec {
    pub id: TransferId,
    pub optimizer: OptimizerSpec,
    /// First active MI.
    pub start: u32,
    /// First MI after the transfer has finished.
    pub stop: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub seeds: Vec<u64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { seeds: (0..10).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub link: LinkScenario,
    pub env: EnvConfig,
    pub transfers: Vec<TransferSpec>,
    /// Run length in MIs.
    pub duration: u32,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub train: TrainConfig,
    pub compare: CompareConfig,
}

impl Scenario {
    /// Empty scenario on `link` with the default environment for its capacity.
    pub fn new(link: LinkScenario, duration: u32, seed: u64) -> Self {
        let env = EnvConfig::for_capacity(link.capacity);
        Scenario {
            link,
            env,
            transfers: Vec::new(),
            duration,
            seed,
            output_dir: None,
            train: TrainConfig::default(),
            compare: CompareConfig::default(),
        }
    }

    /// Adds a transfer active over `[start, stop)`.
    pub fn with_transfer(mut self, id: TransferId, optimizer: OptimizerSpec, start: u32, stop: u32) -> Self {
        self.transfers.push(TransferSpec { id, optimizer, start, stop });
        self
    }

    /// Same scenario with every transfer driven by `optimizer`.
    pub fn with_all_optimizers(&self, optimizer: &OptimizerSpec) -> Self {
        let mut s = self.clone();
        for t in &mut s.transfers {
            t.optimizer = optimizer.clone();
        }
        s
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        self.link.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        self.env.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.transfers {
            if !seen.insert(t.id) {
                return Err(BenchError::Config(format!("duplicate transfer id {}", t.id)));
            }
            if !(t.start < t.stop && t.stop <= self.duration) {
                return Err(BenchError::Config(format!(
                    "transfer {}: need start ({}) < stop ({}) <= duration ({})",
                    t.id, t.start, t.stop, self.duration
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default = "default_duration")]
    duration: u32,
    #[serde(default)]
    seed: u64,
    output_dir: Option<PathBuf>,
    link: LinkScenario,
    env: Option<EnvConfig>,
    #[serde(default)]
    transfer: BTreeMap<String, TransferFile>,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default)]
    compare: CompareConfig,
}

fn default_duration() -> u32 {
    200
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferFile {
    optimizer: OptimizerKind,
    policy: Option<PathBuf>,
    #[serde(default = "default_true")]
    greedy: bool,
    gd: Option<GdParams>,
    bo: Option<BoParams>,
    #[serde(default)]
    start: u32,
    stop: Option<u32>,
}

/// Parses a scenario; relative policy paths are resolved against `base_dir`.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, BenchError> {
    let raw: toml::Value = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
    let has_reward = raw.get("env").and_then(|e| e.get("reward")).is_some();
    let file: ScenarioFile = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;

    let mut env = file.env.unwrap_or_default();
    if !has_reward {
        env.reward = RewardParams::for_scale(env.capacity_scale_for(&file.link));
    }

    let mut transfers = Vec::with_capacity(file.transfer.len());
    for (key, t) in file.transfer {
        let id: TransferId =
            key.parse().map_err(|_| BenchError::Config(format!("transfer key `{key}` is not a non-negative integer")))?;
        let stray = |what: &str| BenchError::Config(format!("transfer {id}: `{what}` given for a {:?} optimizer", t.optimizer));
        let optimizer = match t.optimizer {
            OptimizerKind::Rl => {
                let path =
                    t.policy.ok_or_else(|| BenchError::Config(format!("transfer {id}: rl optimizer needs `policy`")))?;
                OptimizerSpec::Rl { policy: PolicySource::File(base_dir.join(path)), greedy: t.greedy }
            }
            OptimizerKind::Gd => {
                if t.bo.is_some() {
                    return Err(stray("bo"));
                }
                OptimizerSpec::Gd(t.gd.unwrap_or_default())
            }
            OptimizerKind::Bo => {
                if t.gd.is_some() {
                    return Err(stray("gd"));
                }
                OptimizerSpec::Bo(t.bo.unwrap_or_default())
            }
            OptimizerKind::None => OptimizerSpec::None,
        };
        transfers.push(TransferSpec { id, optimizer, start: t.start, stop: t.stop.unwrap_or(file.duration) });
    }
    transfers.sort_by_key(|t| t.id);

    let s = Scenario {
        link: file.link,
        env,
        transfers,
        duration: file.duration,
        seed: file.seed,
        output_dir: file.output_dir,
        train: file.train,
        compare: file.compare,
    };
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        duration = 100
        seed = 3
        [link]
        capacity = 1000.0
        per_stream_cap = 50.0
        [transfer.2]
        optimizer = "gd"
        start = 10
        [transfer.1]
        optimizer = "rl"
        policy = "p.bin"
    "#;

    #[test]
    fn parses_sections() {
        let s = parse_scenario(BASIC, Path::new("/cfg")).unwrap();
        assert_eq!(s.duration, 100);
        assert_eq!(s.transfers.len(), 2);
        assert_eq!(s.transfers[0].id, 1);
        assert_eq!(
            s.transfers[0].optimizer,
            OptimizerSpec::Rl { policy: PolicySource::File("/cfg/p.bin".into()), greedy: true }
        );
        assert_eq!(s.transfers[1].start, 10);
        assert_eq!(s.transfers[1].stop, 100);
        assert_eq!(s.env.reward.epsilon, 5.0);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            "duration = 10",
            "[link]\ncapacity = 1000.0\nbogus = 1",
            "[link]\ncapacity = 1000.0\n[transfer.x]\noptimizer = \"gd\"",
            "[link]\ncapacity = 1000.0\n[transfer.1]\noptimizer = \"rl\"",
            "duration = 10\n[link]\ncapacity = 1000.0\n[transfer.1]\noptimizer = \"gd\"\nstart = 10",
            "[link]\ncapacity = 1000.0\n[transfer.1]\noptimizer = \"gd\"\n[transfer.1.bo]\nwindow = 3",
            "[link]\ncapacity = -1.0",
        ];
        for c in cases {
            assert!(matches!(parse_scenario(c, Path::new(".")), Err(BenchError::Config(_))), "{c}");
        }
    }
}
