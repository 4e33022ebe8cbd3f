use super::BenchError;

/// Default convergence band around the optimum.
pub const CONVERGENCE_BAND: f64 = 0.05;
/// Consecutive MIs a transfer has to stay inside the band.
pub const CONVERGENCE_HOLD: usize = 5;
/// Length of the steady-state window used for fairness.
pub const FAIRNESS_WINDOW: usize = 50;

/// First index at which `throughput` reaches `(1 − band)·optimum` and stays
/// there for `hold` consecutive samples.
pub fn convergence_mi(throughput: &[f64], optimum: f64, band: f64, hold: usize) -> Option<usize> {
    let floor = (1.0 - band) * optimum;
    let hold = hold.max(1);
    let mut run = 0;
    for (i, &t) in throughput.iter().enumerate() {
        if t >= floor {
            run += 1;
            if run == hold {
                return Some(i + 1 - hold);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// `(Σx)² / (N·Σx²)`.
pub fn jain_index(rates: &[f64]) -> Result<f64, BenchError> {
    if rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(BenchError::Metric(format!("rates must be finite and non-negative: {rates:?}")));
    }
    let sum: f64 = rates.iter().sum();
    let sq: f64 = rates.iter().map(|r| r * r).sum();
    if sum <= 0.0 {
        return Err(BenchError::Metric("jain index of all-zero rates".into()));
    }
    Ok((sum * sum / (rates.len() as f64 * sq)).min(1.0))
}

/// Median of a slice; `None` entries (never converged) sort last.
pub fn median_mi(values: &[Option<usize>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.map_or(f64::INFINITY, |m| m as f64)).collect();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let m = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
    m.is_finite().then_some(m)
}
