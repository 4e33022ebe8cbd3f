//! Benchmark harness: scenario files, joint runs of several transfers,
//! metrics, charts and the command-line front end.

pub mod cli;
mod config;
mod metrics;
mod plot;
mod scenario;
mod training;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    load_scenario, parse_scenario, CompareConfig, OptimizerKind, OptimizerSpec, PolicySource, Scenario, TransferSpec,
};
pub use metrics::{
    convergence_mi, jain_index, median_mi, CONVERGENCE_BAND, CONVERGENCE_HOLD, FAIRNESS_WINDOW,
};
pub use plot::{emit_plots, render, PlotKind};
pub use scenario::{
    optimum_throughput, read_trace, run_scenario, summarize, write_outputs, write_trace, OutputFiles, RunOutput,
    RunSummary, SummaryContext, TraceRow, TransferSummary, TRACE_COLUMNS,
};
pub use training::{randomized_starts, train_scenario};

use crate::baseline::{BoParams, GdParams, OptimizerError};
use crate::env::{utility, EnvConfig};
use crate::link::{steady_state_stats, LinkError, LinkScenario};
use crate::policy::PolicyError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("metric: {0}")]
    Metric(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One point of a brute-force concurrency sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub streams: u32,
    pub throughput_mbps: f64,
    pub loss_rate: f64,
    pub retransmissions: u64,
    pub utility: f64,
}

/// Noiseless lone-transfer statistics for every `n` in `range`, background at its mean.
pub fn sweep(
    link: &LinkScenario,
    env: &EnvConfig,
    range: std::ops::RangeInclusive<u32>,
) -> Result<Vec<SweepRow>, BenchError> {
    range
        .map(|n| {
            let st = steady_state_stats(link, n)?;
            Ok(SweepRow {
                streams: n,
                throughput_mbps: st.throughput,
                loss_rate: st.loss_rate,
                retransmissions: st.retransmissions,
                utility: utility(n, st.throughput, st.loss_rate, &env.utility),
            })
        })
        .collect()
}

/// One optimizer on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub optimizer: String,
    pub seed: u64,
    /// Mean of the per-transfer mean throughputs.
    pub mean_throughput_mbps: f64,
    pub aggregate_loss_rate: f64,
    /// Slowest transfer's convergence; empty if any transfer never converged.
    pub convergence_mi: Option<u32>,
    pub mean_utilization: f64,
    pub jain_index: Option<f64>,
}

impl CompareRow {
    fn from_run(optimizer: &str, out: &RunOutput) -> Self {
        let s = &out.summary;
        let k = s.transfers.len().max(1) as f64;
        let total: f64 = out.trace.iter().map(|r| r.throughput_mbps).sum();
        let lost: f64 = out.trace.iter().map(|r| r.throughput_mbps * r.loss_rate).sum();
        let conv = s.transfers.iter().map(|t| t.convergence_mi).collect::<Option<Vec<u32>>>();
        CompareRow {
            optimizer: optimizer.to_string(),
            seed: s.seed,
            mean_throughput_mbps: s.transfers.iter().map(|t| t.mean_throughput_mbps).sum::<f64>() / k,
            aggregate_loss_rate: if total > 0.0 { lost / total } else { 0.0 },
            convergence_mi: conv.and_then(|v| v.into_iter().max()),
            mean_utilization: s.mean_utilization,
            jain_index: s.jain_index,
        }
    }
}

/// Runs the scenario once per seed and optimizer. All optimizers see the
/// same seeds and therefore the same background traffic. The learned
/// policy is only included when `policy` is given. A scenario without
/// transfers gets one transfer spanning the whole run.
pub fn compare(s: &Scenario, seeds: &[u64], policy: Option<PolicySource>) -> Result<Vec<CompareRow>, BenchError> {
    let mut base = s.clone();
    if base.transfers.is_empty() {
        let d = base.duration;
        base = base.with_transfer(0, OptimizerSpec::None, 0, d);
    }
    let find = |k: OptimizerKind| base.transfers.iter().map(|t| &t.optimizer).find(|o| o.kind() == k).cloned();
    let mut specs = vec![
        OptimizerSpec::None,
        find(OptimizerKind::Gd).unwrap_or(OptimizerSpec::Gd(GdParams::default())),
        find(OptimizerKind::Bo).unwrap_or(OptimizerSpec::Bo(BoParams::default())),
    ];
    if let Some(p) = policy {
        specs.push(OptimizerSpec::Rl { policy: p, greedy: true });
    }
    let mut rows = Vec::with_capacity(seeds.len() * specs.len());
    for &seed in seeds {
        for spec in &specs {
            let mut run = base.with_all_optimizers(spec);
            run.seed = seed;
            let out = run_scenario(&run)?;
            rows.push(CompareRow::from_run(spec.kind().name(), &out));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_peaks_at_twenty() {
        let link = LinkScenario::throttled_1g().with_noise(0.0);
        let rows = sweep(&link, &EnvConfig::default(), 1..=40).unwrap();
        let best = rows.iter().max_by(|a, b| a.utility.total_cmp(&b.utility)).unwrap();
        assert_eq!(best.streams, 20);
        let peak = rows.iter().max_by(|a, b| a.throughput_mbps.total_cmp(&b.throughput_mbps)).unwrap();
        assert_eq!(peak.streams, 20);
        for w in rows[19..].windows(2) {
            assert!(w[1].retransmissions > w[0].retransmissions);
        }
    }

    #[test]
    fn compare_matches_seeds() {
        let s = Scenario::new(LinkScenario::throttled_1g(), 40, 0);
        let rows = compare(&s, &[5], None).unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.optimizer.as_str()).collect();
        assert_eq!(names, ["none", "gd", "bo"]);
        assert!(rows.iter().all(|r| r.seed == 5));
    }
}
