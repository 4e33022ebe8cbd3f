use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{OptimizerSpec, PolicySource, Scenario};
use super::metrics::{convergence_mi, jain_index, CONVERGENCE_BAND, CONVERGENCE_HOLD, FAIRNESS_WINDOW};
use super::plot::{emit_plots, PlotKind};
use super::BenchError;
use crate::baseline::{BayesOpt, ConcurrencyOptimizer, GradientDescent, NoOptimizer, Observation, OptimizerDecision};
use crate::env::{reward, utility};
use crate::link::{optimal_concurrency, steady_state_stats, Link, LinkScenario, TransferId};
use crate::policy::{load_policy_for, PolicyAgent};
use crate::seed::derive_seed;

const OPTIMIZER_STREAM: u64 = 0x6f70_7400;

/// Trace column names in file order.
pub const TRACE_COLUMNS: [&str; 9] =
    ["mi", "transfer_id", "streams", "throughput_mbps", "loss_rate", "rtt_s", "utility", "reward", "action"];

/// One row per (MI, active transfer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub mi: u32,
    pub transfer_id: TransferId,
    pub streams: u32,
    pub throughput_mbps: f64,
    pub loss_rate: f64,
    pub rtt_s: f64,
    pub utility: f64,
    /// Reward against the transfer's previous MI; 0 on its first MI.
    pub reward: f64,
    /// What chose `streams`: an RL action name, `probe`, `set`, or `init`.
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSummary {
    pub id: TransferId,
    pub optimizer: String,
    pub start: u32,
    pub stop: u32,
    pub mean_throughput_mbps: f64,
    /// `Σ T·L / Σ T` over the transfer's MIs.
    pub aggregate_loss_rate: f64,
    /// Target throughput for convergence: the best lone-transfer throughput
    /// split evenly among the transfers active when this one starts.
    pub optimum_mbps: f64,
    /// MIs after `start` until throughput settles near `optimum_mbps`.
    pub convergence_mi: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration: u32,
    pub capacity_mbps: f64,
    /// Mean over all MIs of the summed transfer throughput over capacity.
    pub mean_utilization: f64,
    /// Over the last MIs (up to 50) during which every transfer was active.
    pub jain_index: Option<f64>,
    pub transfers: Vec<TransferSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub summary: RunSummary,
}

impl RunOutput {
    /// Throughput series of one transfer, indexed from its start.
    pub fn throughput_of(&self, id: TransferId) -> Vec<f64> {
        self.trace.iter().filter(|r| r.transfer_id == id).map(|r| r.throughput_mbps).collect()
    }

    pub fn streams_of(&self, id: TransferId) -> Vec<u32> {
        self.trace.iter().filter(|r| r.transfer_id == id).map(|r| r.streams).collect()
    }
}

/// Throughput of a lone transfer at its best stream count, background at its mean.
pub fn optimum_throughput(link: &LinkScenario, s: &Scenario) -> Result<f64, BenchError> {
    let n = optimal_concurrency(link, &s.env.utility, s.env.n_max)?;
    Ok(steady_state_stats(link, n)?.throughput)
}

fn build_optimizer(s: &Scenario, id: TransferId, spec: &OptimizerSpec) -> Result<Box<dyn ConcurrencyOptimizer>, BenchError> {
    let seed = derive_seed(s.seed, OPTIMIZER_STREAM + id as u64);
    Ok(match spec {
        OptimizerSpec::Rl { policy, greedy } => {
            let params = match policy {
                PolicySource::File(p) => load_policy_for(p, s.env.state_dim())?,
                PolicySource::Loaded(p) => (**p).clone(),
            };
            let scale = s.env.capacity_scale_for(&s.link);
            Box::new(PolicyAgent::new(params, &s.env, s.link.mi_duration, scale, *greedy, seed)?)
        }
        OptimizerSpec::Gd(p) => {
            let mut p = *p;
            p.n_min = s.env.n_min;
            p.n_max = s.env.n_max;
            p.initial_streams = s.env.initial_streams;
            Box::new(GradientDescent::new(p))
        }
        OptimizerSpec::Bo(p) => {
            let mut p = *p;
            p.n_min = s.env.n_min;
            p.n_max = s.env.n_max;
            p.seed = derive_seed(seed, p.seed);
            Box::new(BayesOpt::new(p))
        }
        OptimizerSpec::None => Box::new(NoOptimizer),
    })
}

struct Live {
    next: OptimizerDecision,
    label: &'static str,
    prev_utility: Option<f64>,
}

/// Steps every active transfer jointly through the link for `s.duration` MIs.
///
/// Each optimizer only sees its own transfer's statistics. Policies are
/// loaded before the first MI, so a bad policy file fails without output.
pub fn run_scenario(s: &Scenario) -> Result<RunOutput, BenchError> {
    s.validate()?;
    let mut opts = s
        .transfers
        .iter()
        .map(|t| build_optimizer(s, t.id, &t.optimizer))
        .collect::<Result<Vec<_>, _>>()?;
    let mut link = Link::with_seed(s.link.clone(), s.seed)?;
    let optimum = if s.transfers.is_empty() { 0.0 } else { optimum_throughput(&s.link, s)? };

    let mut live: BTreeMap<TransferId, Live> = BTreeMap::new();
    let mut trace = Vec::new();
    for mi in 0..s.duration {
        for (t, opt) in s.transfers.iter().zip(opts.iter_mut()) {
            if mi == t.start {
                live.insert(t.id, Live { next: opt.start(), label: "init", prev_utility: None });
            }
            if mi == t.stop {
                live.remove(&t.id);
            }
        }
        let counts: BTreeMap<TransferId, u32> = live.iter().map(|(&id, l)| (id, l.next.next_stream_count)).collect();
        let stats = link.step(&counts);

        for (t, opt) in s.transfers.iter().zip(opts.iter_mut()) {
            let Some(l) = live.get_mut(&t.id) else { continue };
            let st = stats[&t.id];
            let u = utility(st.stream_count, st.throughput, st.loss_rate, &s.env.utility);
            let r = l.prev_utility.map_or(0.0, |p| reward(u, p, &s.env.reward));
            trace.push(TraceRow {
                mi,
                transfer_id: t.id,
                streams: st.stream_count,
                throughput_mbps: st.throughput,
                loss_rate: st.loss_rate,
                rtt_s: st.mean_rtt,
                utility: u,
                reward: r,
                action: l.label.to_string(),
            });
            let d = opt.observe(&Observation { streams: st.stream_count, stats: st, utility: u })?;
            *l = Live { next: d, label: d.label(), prev_utility: Some(u) };
        }
    }

    let ctx = SummaryContext::new(s, optimum);
    let summary = summarize(&trace, &ctx)?;
    Ok(RunOutput { trace, summary })
}

/// Everything besides the trace that the summary depends on.
#[derive(Debug, Clone)]
pub struct SummaryContext {
    pub seed: u64,
    pub duration: u32,
    pub capacity: f64,
    /// (id, optimizer name, start, stop, optimum throughput)
    pub transfers: Vec<(TransferId, String, u32, u32, f64)>,
}

impl SummaryContext {
    pub fn new(s: &Scenario, optimum_total: f64) -> Self {
        let transfers = s
            .transfers
            .iter()
            .map(|t| {
                let concurrent =
                    s.transfers.iter().filter(|o| o.start <= t.start && t.start < o.stop).count().max(1);
                (t.id, t.optimizer.kind().name().to_string(), t.start, t.stop, optimum_total / concurrent as f64)
            })
            .collect();
        SummaryContext { seed: s.seed, duration: s.duration, capacity: s.link.capacity, transfers }
    }
}

pub fn summarize(trace: &[TraceRow], ctx: &SummaryContext) -> Result<RunSummary, BenchError> {
    let mut transfers = Vec::with_capacity(ctx.transfers.len());
    for (id, name, start, stop, optimum) in &ctx.transfers {
        let rows: Vec<&TraceRow> = trace.iter().filter(|r| r.transfer_id == *id).collect();
        let tput: Vec<f64> = rows.iter().map(|r| r.throughput_mbps).collect();
        let total: f64 = tput.iter().sum();
        let lost: f64 = rows.iter().map(|r| r.throughput_mbps * r.loss_rate).sum();
        transfers.push(TransferSummary {
            id: *id,
            optimizer: name.clone(),
            start: *start,
            stop: *stop,
            mean_throughput_mbps: if rows.is_empty() { 0.0 } else { total / rows.len() as f64 },
            aggregate_loss_rate: if total > 0.0 { lost / total } else { 0.0 },
            optimum_mbps: *optimum,
            convergence_mi: convergence_mi(&tput, *optimum, CONVERGENCE_BAND, CONVERGENCE_HOLD).map(|m| m as u32),
        });
    }

    let mut per_mi: BTreeMap<u32, Vec<&TraceRow>> = BTreeMap::new();
    for r in trace {
        per_mi.entry(r.mi).or_default().push(r);
    }
    let mean_utilization = if ctx.duration == 0 || ctx.capacity <= 0.0 {
        0.0
    } else {
        let u: f64 = per_mi.values().map(|rows| rows.iter().map(|r| r.throughput_mbps).sum::<f64>() / ctx.capacity).sum();
        u / ctx.duration as f64
    };

    let k = ctx.transfers.len();
    let full: Vec<&Vec<&TraceRow>> = per_mi.values().filter(|rows| k > 0 && rows.len() == k).collect();
    let window = &full[full.len().saturating_sub(FAIRNESS_WINDOW)..];
    let jain = if window.is_empty() {
        None
    } else {
        let mut sums = vec![0.0; k];
        for rows in window {
            for (i, r) in rows.iter().enumerate() {
                sums[i] += r.throughput_mbps;
            }
        }
        let means: Vec<f64> = sums.iter().map(|s| s / window.len() as f64).collect();
        jain_index(&means).ok()
    };

    Ok(RunSummary {
        seed: ctx.seed,
        duration: ctx.duration,
        capacity_mbps: ctx.capacity,
        mean_utilization,
        jain_index: jain,
        transfers,
    })
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceRow]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in trace {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::Io(e.to_string()))?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_COLUMNS {
        return Err(BenchError::Config(format!("unexpected trace header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub trace: PathBuf,
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Writes `trace.csv`, `summary.json` and the SVG charts into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<OutputFiles, BenchError> {
    let io = |e: std::io::Error| BenchError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let trace = dir.join("trace.csv");
    write_trace(fs::File::create(&trace).map_err(io)?, &out.trace)?;
    let summary = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&out.summary).map_err(|e| BenchError::Io(e.to_string()))?;
    fs::write(&summary, json + "\n").map_err(io)?;
    let plots = emit_plots(&out.trace, dir, &PlotKind::ALL)?;
    Ok(OutputFiles { trace, summary, plots })
}
