//! `streamtune` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::{
    compare, load_scenario, run_scenario, sweep, train_scenario, write_outputs, BenchError, PolicySource,
    Scenario,
};
use crate::policy::{load_policy_for, save_policy, save_train_log, smoothed_return, PolicyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "streamtune", version, about = "Parallel-stream tuning on a simulated bottleneck link")]
pub struct Cli {
    /// Overrides the scenario seed (and the training seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the run length in MIs.
    #[arg(long, global = true)]
    pub duration: Option<u32>,
    /// Format of tables written to stdout.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy on the scenario's link and environment.
    Train {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `[train] episodes`.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Continue training an existing policy.
    Retrain {
        scenario: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Run the scenario and write trace, summary and charts.
    Run {
        scenario: PathBuf,
        /// Defaults to the scenario's `output_dir`, then `out`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Lone-transfer statistics for a range of stream counts.
    Sweep {
        scenario: PathBuf,
        /// Inclusive range such as `1..40`.
        #[arg(long, value_parser = parse_range, default_value = "1..64")]
        n_range: (u32, u32),
    },
    /// Run every optimizer on the same seeds.
    Compare {
        scenario: PathBuf,
        /// Adds the learned policy to the comparison.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let a: u32 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{b}: {e}"))?;
    if a == 0 || a > b {
        return Err(format!("need 1 <= a <= b, got {a}..{b}"));
    }
    Ok((a, b))
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn load(path: &Path, cli: &Cli) -> Result<Scenario, BenchError> {
    let mut s = load_scenario(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
        s.train.seed = seed;
        s.compare.seeds = vec![seed];
    }
    if let Some(d) = cli.duration {
        s.duration = d;
        for t in &mut s.transfers {
            t.stop = t.stop.min(d);
        }
        s.validate()?;
    }
    Ok(s)
}

fn emit<T: Serialize>(rows: &[T], format: Format, out: &mut dyn Write) -> Result<(), BenchError> {
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(rows).map_err(|e| BenchError::Io(e.to_string()))?;
            writeln!(out, "{text}").map_err(|e| BenchError::Io(e.to_string()))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| BenchError::Io(e.to_string()))
        }
    }
}

fn train_command(
    s: &Scenario,
    init: Option<PolicyParams>,
    out_path: &Path,
    episodes: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), BenchError> {
    let mut cfg = s.train.clone();
    if let Some(e) = episodes {
        cfg.episodes = e;
    }
    let outcome = train_scenario(s, &cfg, init)?;
    save_policy(&outcome.params, out_path)?;
    let log_path = out_path.with_extension("log.csv");
    save_train_log(&log_path, &outcome.log)?;
    let smooth = smoothed_return(&outcome.log, 100).unwrap_or(0.0);
    writeln!(
        out,
        "trained {} episodes, mean return over the last 100: {smooth:.3}\npolicy: {}\nlog: {}",
        outcome.log.len(),
        out_path.display(),
        log_path.display()
    )
    .map_err(|e| BenchError::Io(e.to_string()))
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), BenchError> {
    match &cli.command {
        Command::Train { scenario, out: path, episodes } => {
            let s = load(scenario, cli)?;
            train_command(&s, None, path, *episodes, out)
        }
        Command::Retrain { scenario, input, out: path, episodes } => {
            let s = load(scenario, cli)?;
            let init = load_policy_for(input, s.env.state_dim())?;
            train_command(&s, Some(init), path, *episodes, out)
        }
        Command::Run { scenario, out_dir } => {
            let s = load(scenario, cli)?;
            let result = run_scenario(&s)?;
            let dir = out_dir.clone().or_else(|| s.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            write_outputs(&dir, &result)?;
            match cli.format {
                Format::Json => {
                    let text =
                        serde_json::to_string_pretty(&result.summary).map_err(|e| BenchError::Io(e.to_string()))?;
                    writeln!(out, "{text}").map_err(|e| BenchError::Io(e.to_string()))
                }
                Format::Csv => emit(&result.summary.transfers, Format::Csv, out),
            }
        }
        Command::Sweep { scenario, n_range } => {
            let s = load(scenario, cli)?;
            let rows = sweep(&s.link, &s.env, n_range.0..=n_range.1)?;
            emit(&rows, cli.format, out)
        }
        Command::Compare { scenario, policy } => {
            let s = load(scenario, cli)?;
            let policy = match policy {
                Some(p) => Some(PolicySource::Loaded(Arc::new(load_policy_for(p, s.env.state_dim())?))),
                None => None,
            };
            let rows = compare(&s, &s.compare.seeds, policy)?;
            emit(&rows, cli.format, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..40"), Ok((1, 40)));
        assert_eq!(parse_range("3..=5"), Ok((3, 5)));
        assert!(parse_range("0..4").is_err());
        assert!(parse_range("5..4").is_err());
        assert!(parse_range("5").is_err());
    }

    #[test]
    fn usage_errors_exit_nonzero() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(cli_main(["streamtune", "frobnicate"], &mut o, &mut e), 2);
        assert!(!e.is_empty());
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(cli_main(["streamtune", "run", "x.toml", "--bogus"], &mut o, &mut e), 2);
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(cli_main(["streamtune", "--help"], &mut o, &mut e), 0);
        assert!(String::from_utf8(o).unwrap().contains("sweep"));
    }
}
