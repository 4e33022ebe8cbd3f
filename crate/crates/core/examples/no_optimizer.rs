//! A single-stream transfer on a 10 Gbps path next to a tuned one.
//!
//! ```bash
//! cargo run --release -p streamtune --example no_optimizer
//! ```

use streamtune::baseline::GdParams;
use streamtune::bench::{run_scenario, OptimizerSpec, Scenario};
use streamtune::link::LinkScenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let link = LinkScenario::uncapped_10g();
    for (name, spec) in [("one stream", OptimizerSpec::None), ("gd", OptimizerSpec::Gd(GdParams::default()))] {
        let out = run_scenario(&Scenario::new(link.clone(), 200, 0).with_transfer(0, spec, 0, 200))?;
        let t = &out.summary.transfers[0];
        println!(
            "{name:<10} {:>7.0} Mbps of {:.0} ({:.1}% utilization), final n = {}",
            t.mean_throughput_mbps,
            link.capacity,
            100.0 * out.summary.mean_utilization,
            out.streams_of(0).last().unwrap()
        );
    }
    Ok(())
}
