use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Stream-count adjustments available to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up5,
    Up1,
    Hold,
    Down1,
    Down5,
}

impl Action {
    pub const COUNT: usize = 5;
    pub const ALL: [Action; Action::COUNT] = [Action::Up5, Action::Up1, Action::Hold, Action::Down1, Action::Down5];

    pub fn delta(self) -> i64 {
        match self {
            Action::Up5 => 5,
            Action::Up1 => 1,
            Action::Hold => 0,
            Action::Down1 => -1,
            Action::Down5 => -5,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Action::Up5 => 0,
            Action::Up1 => 1,
            Action::Hold => 2,
            Action::Down1 => 3,
            Action::Down5 => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up5 => "Up5",
            Action::Up1 => "Up1",
            Action::Hold => "Hold",
            Action::Down1 => "Down1",
            Action::Down5 => "Down5",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown action {s:?}"))
    }
}

/// `clamp(n + delta(a), n_min, n_max)`.
pub fn apply_action(n: u32, action: Action, n_min: u32, n_max: u32) -> u32 {
    (n as i64 + action.delta()).clamp(n_min as i64, n_max as i64) as u32
}
