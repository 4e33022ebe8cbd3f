//! Brute-force sweep of the stream count on a throttled 1 Gbps link.
//!
//! ```bash
//! cargo run --release -p streamtune --example concurrency_sweep
//! ```

use streamtune::bench::sweep;
use streamtune::env::EnvConfig;
use streamtune::link::{optimal_concurrency, LinkScenario};

fn main() {
    let link = LinkScenario::throttled_1g().with_noise(0.0);
    let env = EnvConfig::for_capacity(link.capacity);
    let rows = sweep(&link, &env, 1..=40).expect("valid scenario");

    println!("{:>3} {:>10} {:>9} {:>8} {:>9}", "n", "Mbps", "loss", "retx/MI", "utility");
    for r in &rows {
        println!(
            "{:>3} {:>10.1} {:>9.5} {:>8} {:>9.1}",
            r.streams, r.throughput_mbps, r.loss_rate, r.retransmissions, r.utility
        );
    }
    let best = optimal_concurrency(&link, &env.utility, 64).unwrap();
    println!("\nbest stream count: {best} (saturation at {:.0} streams)", link.saturation_streams());

    // Without a per-stream throttle one stream is limited by the Mathis bound instead.
    let open = LinkScenario::uncapped_10g().with_noise(0.0);
    println!(
        "10 Gbps link: one stream gets {:.0} Mbps, best stream count {}",
        open.effective_stream_cap(),
        optimal_concurrency(&open, &env.utility, 64).unwrap()
    );
}
