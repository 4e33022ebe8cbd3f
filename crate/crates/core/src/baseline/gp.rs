//! One-dimensional Gaussian process regression with a squared-exponential
//! kernel, and the expected-improvement acquisition.

use statrs::function::erf::erf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("kernel matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("no observations")]
    Empty,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
}

/// GP posterior over observations `(x_i, y_i)` with the prior mean zero.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    xs: Vec<f64>,
    length_scale: f64,
    signal_var: f64,
    /// Lower Cholesky factor of `K + σn²I`, row-major.
    chol: Vec<f64>,
    alpha: Vec<f64>,
}

impl GaussianProcess {
    /// Fits the posterior. `jitter` is added to the diagonal on top of the noise.
    pub fn fit(
        xs: &[f64],
        ys: &[f64],
        length_scale: f64,
        signal_var: f64,
        noise_var: f64,
        jitter: f64,
    ) -> Result<Self, GpError> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(GpError::Empty);
        }
        if !(length_scale > 0.0 && signal_var > 0.0 && noise_var >= 0.0 && jitter >= 0.0) {
            return Err(GpError::InvalidHyper(format!(
                "length_scale {length_scale}, signal_var {signal_var}, noise_var {noise_var}, jitter {jitter}"
            )));
        }
        let n = xs.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = se_kernel(xs[i], xs[j], length_scale, signal_var);
            }
            k[i * n + i] += noise_var + jitter;
        }
        let chol = cholesky(&k, n)?;
        let z = forward_sub(&chol, n, ys);
        let alpha = backward_sub_t(&chol, n, &z);
        Ok(GaussianProcess { xs: xs.to_vec(), length_scale, signal_var, chol, alpha })
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn predict(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        let ks: Vec<f64> = self.xs.iter().map(|&xi| se_kernel(x, xi, self.length_scale, self.signal_var)).collect();
        let mean = ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = forward_sub(&self.chol, n, &ks);
        let var = self.signal_var - v.iter().map(|a| a * a).sum::<f64>();
        (mean, var.max(0.0).sqrt())
    }
}

pub fn se_kernel(a: f64, b: f64, length_scale: f64, signal_var: f64) -> f64 {
    let d = (a - b) / length_scale;
    signal_var * (-0.5 * d * d).exp()
}

fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, GpError> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 0.0) || !d.is_finite() {
                    return Err(GpError::NotPositiveDefinite);
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L z = b`.
fn forward_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * n + i];
    }
    z
}

/// Solves `Lᵀ x = z`.
fn backward_sub_t(l: &[f64], n: usize, z: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * n + i];
    }
    x
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement of a Gaussian `N(mean, sd²)` over `best`.
/// With `sd = 0` this is `max(mean - best, 0)`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let diff = mean - best;
    if sd <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / sd;
    (diff * std_normal_cdf(z) + sd * std_normal_pdf(z)).max(0.0)
}
