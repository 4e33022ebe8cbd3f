//! Trains a policy on the bundled training scenario and saves it.
//!
//! ```bash
//! cargo run --release -p streamtune --example train_agent -- [episodes] [out.bin]
//! ```

use std::path::{Path, PathBuf};

use streamtune::bench::{load_scenario, train_scenario};
use streamtune::policy::{save_policy, save_train_log, smoothed_return, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/train_throttled.toml");
    let s = load_scenario(&scenario)?;
    let episodes = args.next().map(|a| a.parse()).transpose()?.unwrap_or(s.train.episodes);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("policy.bin"));

    let cfg = TrainConfig { episodes, ..s.train.clone() };
    let outcome = train_scenario(&s, &cfg, None)?;

    for end in (200..=outcome.log.len()).step_by(200) {
        let r = smoothed_return(&outcome.log[..end], 200).unwrap();
        let e = &outcome.log[end - 1];
        println!("episode {end:>5}: mean return {r:>6.2}  entropy {:.3}  critic loss {:.3}", e.entropy, e.critic_loss);
    }
    save_policy(&outcome.params, &out)?;
    save_train_log(&out.with_extension("log.csv"), &outcome.log)?;
    println!("saved {}", out.display());
    Ok(())
}
