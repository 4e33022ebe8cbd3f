//! Standalone SVG line charts of a run trace.
//!
//! Output is a pure function of the trace: coordinates are printed with a
//! fixed number of decimals so repeated runs produce identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::scenario::TraceRow;
use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// One throughput series per transfer.
    Throughput,
    /// One stream-count series per transfer.
    Streams,
    /// Throughput-weighted loss rate across transfers.
    Loss,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::Throughput, PlotKind::Streams, PlotKind::Loss];

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::Throughput => "throughput.svg",
            PlotKind::Streams => "streams.svg",
            PlotKind::Loss => "loss.svg",
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const W: f64 = 800.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Writes one file per requested chart into `dir`. An empty trace writes nothing.
pub fn emit_plots(trace: &[TraceRow], dir: &Path, kinds: &[PlotKind]) -> Result<Vec<PathBuf>, BenchError> {
    if trace.is_empty() {
        log::warn!("empty trace, no plots written");
        return Ok(Vec::new());
    }
    let mut files = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let path = dir.join(kind.file_name());
        fs::write(&path, render(trace, kind)).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        files.push(path);
    }
    Ok(files)
}

/// SVG document for one chart.
pub fn render(trace: &[TraceRow], kind: PlotKind) -> String {
    let (title, y_label, series) = match kind {
        PlotKind::Throughput => ("Throughput per transfer", "Mbps", per_transfer(trace, |r| r.throughput_mbps)),
        PlotKind::Streams => ("Stream count per transfer", "streams", per_transfer(trace, |r| r.streams as f64)),
        PlotKind::Loss => ("Aggregate loss rate", "loss rate", vec![aggregate_loss(trace)]),
    };
    chart(title, y_label, &series)
}

fn per_transfer(trace: &[TraceRow], f: impl Fn(&TraceRow) -> f64) -> Vec<Series> {
    let mut by_id: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for r in trace {
        by_id.entry(r.transfer_id).or_default().push((r.mi as f64, f(r)));
    }
    by_id.into_iter().map(|(id, points)| Series { label: format!("transfer {id}"), points }).collect()
}

fn aggregate_loss(trace: &[TraceRow]) -> Series {
    let mut by_mi: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for r in trace {
        let e = by_mi.entry(r.mi).or_default();
        e.0 += r.throughput_mbps * r.loss_rate;
        e.1 += r.throughput_mbps;
    }
    let points = by_mi.into_iter().map(|(mi, (lost, total))| (mi as f64, if total > 0.0 { lost / total } else { 0.0 })).collect();
    Series { label: "all transfers".into(), points }
}

/// Rounds `max` up to a 1-2-5 multiple for the axis top.
fn nice_ceiling(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(max.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|&v| v >= max).unwrap_or(10.0 * mag)
}

fn chart(title: &str, y_label: &str, series: &[Series]) -> String {
    let x_max = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).fold(1.0, f64::max);
    let y_max = nice_ceiling(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).fold(0.0, f64::max));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * pw;
    let sy = |y: f64| TOP + ph - y / y_max * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{title}</text>"#, W / 2.0);
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#ddd"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            tick(v)
        );
        let xv = x_max * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + ph + 18.0,
            tick(xv)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">MI</text>"#, LEFT + pw / 2.0, H - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT - 120.0,
            W - RIGHT - 100.0,
            W - RIGHT - 94.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 || v.abs() >= 10.0 {
        format!("{v:.0}")
    } else if v.abs() >= 0.1 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}
