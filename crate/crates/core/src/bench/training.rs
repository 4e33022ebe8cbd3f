//! Training on a scenario's link.
//!
//! Episodes are short, so an agent that always starts at the same stream
//! count under the same background load sees only a sliver of the state
//! space. Each training episode therefore draws its initial stream count
//! uniformly from `[n_min, n_max]` and, for a Markov background, its initial
//! load level uniformly from the chain's levels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BenchError, Scenario};
use crate::env::{EnvConfig, EnvError, TransferEnv};
use crate::link::{BackgroundProcess, LinkScenario};
use crate::policy::{train, PolicyParams, TrainConfig, TrainOutcome};
use crate::seed::derive_seed;

const START_STREAM: u64 = 0x7374_6172;

/// Environment factory for [`train`] with randomized episode starts.
pub fn randomized_starts(
    link: LinkScenario,
    env: EnvConfig,
    master_seed: u64,
) -> impl FnMut(u64) -> Result<TransferEnv, EnvError> {
    let starts = derive_seed(master_seed, START_STREAM);
    move |episode| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(starts, episode));
        let mut e = env.clone();
        e.initial_streams = rng.random_range(e.n_min..=e.n_max);
        let mut l = link.clone();
        if let BackgroundProcess::Markov { levels, initial_level, .. } = &mut l.background {
            *initial_level = rng.random_range(0..levels.len());
        }
        TransferEnv::new(l, e, master_seed)
    }
}

/// Trains on `s.link` and `s.env` with randomized starts, seeded by `cfg.seed`.
pub fn train_scenario(
    s: &Scenario,
    cfg: &TrainConfig,
    init: Option<PolicyParams>,
) -> Result<TrainOutcome, BenchError> {
    train(randomized_starts(s.link.clone(), s.env.clone(), cfg.seed), cfg, init)
        .map_err(|e| BenchError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_cover_bounds_and_levels() {
        let link = LinkScenario::throttled_1g().with_background(BackgroundProcess::four_level(4, 8, 12, 30.0));
        let mut make = randomized_starts(link, EnvConfig::default(), 3);
        let mut ns = std::collections::BTreeSet::new();
        let mut lv = std::collections::BTreeSet::new();
        for ep in 0..500 {
            let env = make(ep).unwrap();
            ns.insert(env.config().initial_streams);
            if let BackgroundProcess::Markov { initial_level, .. } = env.scenario().background {
                lv.insert(initial_level);
            }
        }
        assert_eq!(ns.first(), Some(&1));
        assert_eq!(ns.last(), Some(&64));
        assert_eq!(lv.len(), 4);
        let a = make(17).unwrap();
        let b = make(17).unwrap();
        assert_eq!(a.config(), b.config());
    }
}
