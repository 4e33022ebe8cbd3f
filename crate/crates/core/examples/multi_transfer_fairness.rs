//! Three transfers joining 50 MIs apart on the throttled link, first all
//! under one optimizer, then one of each competing for the bottleneck.
//!
//! ```bash
//! cargo run --release -p streamtune --example multi_transfer_fairness -- [policy.bin]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use streamtune::baseline::{BoParams, GdParams};
use streamtune::bench::{
    load_scenario, run_scenario, train_scenario, write_outputs, OptimizerSpec, PolicySource, RunOutput, Scenario,
};
use streamtune::link::LinkScenario;
use streamtune::policy::load_policy;

fn report(label: &str, out: &RunOutput) {
    let jain = out.summary.jain_index.map_or("-".to_string(), |j| format!("{j:.3}"));
    let means: Vec<String> = out
        .summary
        .transfers
        .iter()
        .map(|t| format!("{}#{} {:.0}", t.optimizer, t.id, out.throughput_of(t.id)[out.throughput_of(t.id).len() - 50..].iter().sum::<f64>() / 50.0))
        .collect();
    println!("{label:<8} jain {jain}  last-50 Mbps: {}", means.join(", "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = match std::env::args().nth(1).map(PathBuf::from) {
        Some(p) => Arc::new(load_policy(&p)?),
        None => {
            let s = load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/train_throttled.toml"))?;
            Arc::new(train_scenario(&s, &s.train, None)?.params)
        }
    };
    let rl = OptimizerSpec::Rl { policy: PolicySource::Loaded(policy), greedy: true };
    let gd = OptimizerSpec::Gd(GdParams::default());
    let bo = OptimizerSpec::Bo(BoParams::default());

    let staggered = |a: &OptimizerSpec, b: &OptimizerSpec, c: &OptimizerSpec| {
        Scenario::new(LinkScenario::throttled_1g(), 200, 3)
            .with_transfer(1, a.clone(), 0, 200)
            .with_transfer(2, b.clone(), 50, 200)
            .with_transfer(3, c.clone(), 100, 200)
    };
    for (label, s) in [
        ("all rl", staggered(&rl, &rl, &rl)),
        ("all gd", staggered(&gd, &gd, &gd)),
        ("all bo", staggered(&bo, &bo, &bo)),
        ("mixed", staggered(&rl, &gd, &bo)),
    ] {
        let out = run_scenario(&s)?;
        report(label, &out);
        write_outputs(&Path::new("out/fairness").join(label.replace(' ', "_")), &out)?;
    }
    Ok(())
}
