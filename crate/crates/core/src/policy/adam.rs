use super::net::PolicyParams;
use super::PolicyError;

/// Adaptive moment estimation over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; num_params], v: vec![0.0; num_params], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step on `params` along `grads`.
    pub fn update(&mut self, params: &mut PolicyParams, grads: &[f64], lr: f64) -> Result<(), PolicyError> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(PolicyError::Shape(format!(
                "gradient of length {} for {} parameters (optimizer sized for {})",
                grads.len(),
                params.len(),
                self.m.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params.as_mut_slice().iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Rescales `grads` in place so its L2 norm is at most `max_norm`.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::net::PolicyDims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> PolicyParams {
        PolicyParams::init(PolicyDims::new(4, vec![3], true), &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = params();
        let before = p.clone();
        let mut adam = Adam::new(p.len());
        for _ in 0..5 {
            adam.update(&mut p, &vec![0.0; before.len()], 1e-2).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn moments_make_successive_steps_differ() {
        let mut p = params();
        let g: Vec<f64> = (0..p.len()).map(|i| if i % 2 == 0 { 0.5 } else { -0.1 * i as f64 }).collect();
        let mut adam = Adam::new(p.len());
        let p0 = p.clone();
        adam.update(&mut p, &g, 1e-2).unwrap();
        let p1 = p.clone();
        adam.update(&mut p, &g, 1e-2).unwrap();
        let d1: Vec<f64> = p1.as_slice().iter().zip(p0.as_slice()).map(|(a, b)| a - b).collect();
        let d2: Vec<f64> = p.as_slice().iter().zip(p1.as_slice()).map(|(a, b)| a - b).collect();
        assert_ne!(d1, d2);
        assert_eq!(adam.steps(), 2);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = params();
        let mut adam = Adam::new(p.len());
        assert!(adam.update(&mut p, &[0.0; 3], 1e-3).is_err());
        let mut wrong = Adam::new(3);
        assert!(wrong.update(&mut p, &vec![0.0; 31], 1e-3).is_err());
    }

    #[test]
    fn norm_clipping() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
        let mut small = vec![0.1, 0.1];
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.1, 0.1]);
    }
}
