//! Matched-seed comparison with background traffic, from a scenario file.
//!
//! ```bash
//! cargo run --release -p streamtune --example compare_optimizers -- [policy.bin]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use streamtune::bench::{compare, load_scenario, train_scenario, PolicySource};
use streamtune::policy::load_policy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios");
    let s = load_scenario(&dir.join("background_compare.toml"))?;
    let policy = match std::env::args().nth(1).map(PathBuf::from) {
        Some(p) => load_policy(&p)?,
        None => {
            let t = load_scenario(&dir.join("train_throttled.toml"))?;
            train_scenario(&t, &t.train, None)?.params
        }
    };
    let rows = compare(&s, &s.compare.seeds, Some(PolicySource::Loaded(Arc::new(policy))))?;

    println!("{:<5} {:>4} {:>9} {:>8} {:>10} {:>6}", "opt", "seed", "Mbps", "loss", "converged", "util");
    for r in &rows {
        let conv = r.convergence_mi.map_or("-".to_string(), |m| m.to_string());
        println!(
            "{:<5} {:>4} {:>9.1} {:>8.4} {conv:>10} {:>6.3}",
            r.optimizer, r.seed, r.mean_throughput_mbps, r.aggregate_loss_rate, r.mean_utilization
        );
    }
    println!();
    for name in ["none", "gd", "bo", "rl"] {
        let mine: Vec<_> = rows.iter().filter(|r| r.optimizer == name).collect();
        let k = mine.len() as f64;
        println!(
            "{name:<5} mean {:>7.1} Mbps, loss {:.4}",
            mine.iter().map(|r| r.mean_throughput_mbps).sum::<f64>() / k,
            mine.iter().map(|r| r.aggregate_loss_rate).sum::<f64>() / k
        );
    }
    Ok(())
}
