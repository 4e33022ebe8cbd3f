//! One transfer on the throttled link, driven by each optimizer in turn.
//! Writes traces, summaries and charts under `out/single_transfer/`.
//!
//! ```bash
//! cargo run --release -p streamtune --example single_transfer -- [policy.bin]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use streamtune::baseline::{BoParams, GdParams};
use streamtune::bench::{
    load_scenario, run_scenario, train_scenario, write_outputs, OptimizerSpec, PolicySource, Scenario,
};
use streamtune::link::LinkScenario;
use streamtune::policy::{load_policy, PolicyParams};

/// Loads `path` or, without one, trains a policy on the bundled scenario.
pub fn policy_or_train(path: Option<PathBuf>) -> Result<Arc<PolicyParams>, Box<dyn std::error::Error>> {
    if let Some(p) = path {
        return Ok(Arc::new(load_policy(&p)?));
    }
    let s = load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/train_throttled.toml"))?;
    eprintln!("no policy given, training {} episodes", s.train.episodes);
    Ok(Arc::new(train_scenario(&s, &s.train, None)?.params))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = policy_or_train(std::env::args().nth(1).map(PathBuf::from))?;
    let optimizers = [
        ("gd", OptimizerSpec::Gd(GdParams::default())),
        ("bo", OptimizerSpec::Bo(BoParams::default())),
        ("rl", OptimizerSpec::Rl { policy: PolicySource::Loaded(policy), greedy: true }),
        ("none", OptimizerSpec::None),
    ];
    println!("{:<5} {:>10} {:>8} {:>12} {:>12}", "opt", "Mbps", "loss", "converged", "final n");
    for (name, spec) in optimizers {
        let s = Scenario::new(LinkScenario::throttled_1g(), 200, 0).with_transfer(0, spec, 0, 200);
        let out = run_scenario(&s)?;
        let t = &out.summary.transfers[0];
        let conv = t.convergence_mi.map_or("never".to_string(), |m| format!("MI {m}"));
        let last = out.streams_of(0).last().copied().unwrap_or(0);
        println!(
            "{name:<5} {:>10.1} {:>8.4} {conv:>12} {last:>12}",
            t.mean_throughput_mbps, t.aggregate_loss_rate
        );
        write_outputs(Path::new("out/single_transfer").join(name).as_path(), &out)?;
    }
    Ok(())
}
