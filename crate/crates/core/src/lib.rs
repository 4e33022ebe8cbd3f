//! Tuning the number of parallel TCP streams of a bulk transfer.
//!
//! The crate bundles a bottleneck-link simulator ([`link`]), the transfer
//! MDP built on top of it ([`env`]), a from-scratch actor-critic learner
//! ([`policy`]), gradient-descent and Bayesian baselines ([`baseline`]) and
//! a benchmark harness with a small CLI ([`bench`]).
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run --release -p streamtune --example concurrency_sweep
//! cargo run --release -p streamtune --example train_agent
//! cargo run --release -p streamtune --example single_transfer
//! ```

pub mod baseline;
pub mod bench;
pub mod env;
pub mod link;
pub mod policy;
pub mod seed;
