//! Actor-critic MLP with hand-written forward and backward passes.
//!
//! All weights live in one flat vector so the optimizer, persistence and
//! gradient checks can treat the network as a single parameter vector.
//! Dense weights are stored row-major as `[fan_out][fan_in]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::env::Action;

pub const NUM_ACTIONS: usize = Action::COUNT;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDims {
    pub input: usize,
    pub hidden: Vec<usize>,
    /// Critic head reads the actor trunk instead of owning a trunk.
    pub shared_trunk: bool,
}

impl PolicyDims {
    pub fn new(input: usize, hidden: Vec<usize>, shared_trunk: bool) -> Self {
        PolicyDims { input, hidden, shared_trunk }
    }

    fn validate(&self) -> Result<(), PolicyError> {
        if self.input == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(PolicyError::Shape(format!("invalid network dimensions {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dense {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl Dense {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    fn bias(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }

    fn size(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }

    fn forward(&self, params: &[f64], x: &[f64], out: &mut Vec<f64>) {
        let w = &params[self.weights()];
        let b = &params[self.bias()];
        out.clear();
        out.extend((0..self.fan_out).map(|o| {
            let row = &w[o * self.fan_in..(o + 1) * self.fan_in];
            b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }));
    }

    /// Accumulates dW, db into `grads` and returns dL/dx.
    fn backward(&self, params: &[f64], x: &[f64], dy: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let w = &params[self.weights()];
        let wr = self.weights();
        let br = self.bias();
        let mut dx = vec![0.0; self.fan_in];
        for (o, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = o * self.fan_in;
            let gw = &mut grads[wr.start + row..wr.start + row + self.fan_in];
            for ((g, &xi), (dxi, &wi)) in gw.iter_mut().zip(x).zip(dx.iter_mut().zip(&w[row..row + self.fan_in])) {
                *g += d * xi;
                *dxi += d * wi;
            }
            grads[br.start + o] += d;
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    actor_trunk: Vec<Dense>,
    actor_head: Dense,
    critic_trunk: Vec<Dense>,
    critic_head: Dense,
    total: usize,
}

impl Layout {
    fn new(dims: &PolicyDims) -> Layout {
        let mut offset = 0;
        let mut dense = |fan_in, fan_out| {
            let d = Dense { fan_in, fan_out, offset };
            offset += d.size();
            d
        };
        let trunk = |dense: &mut dyn FnMut(usize, usize) -> Dense| {
            let mut prev = dims.input;
            dims.hidden
                .iter()
                .map(|&h| {
                    let d = dense(prev, h);
                    prev = h;
                    d
                })
                .collect::<Vec<_>>()
        };
        let last = *dims.hidden.last().expect("validated non-empty");
        let actor_trunk = trunk(&mut dense);
        let actor_head = dense(last, NUM_ACTIONS);
        let critic_trunk = if dims.shared_trunk { Vec::new() } else { trunk(&mut dense) };
        let critic_head = dense(last, 1);
        Layout { actor_trunk, actor_head, critic_trunk, critic_head, total: offset }
    }
}

/// Weights of the actor (trunk + softmax head) and the critic head.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    dims: PolicyDims,
    layout: Layout,
    params: Vec<f64>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    actor_acts: Vec<Vec<f64>>,
    critic_acts: Vec<Vec<f64>>,
    pub logits: [f64; NUM_ACTIONS],
    pub probs: [f64; NUM_ACTIONS],
    pub value: f64,
}

impl PolicyParams {
    /// All-zero weights: uniform policy, zero value.
    pub fn zeros(dims: PolicyDims) -> Result<Self, PolicyError> {
        dims.validate()?;
        let layout = Layout::new(&dims);
        let params = vec![0.0; layout.total];
        Ok(PolicyParams { dims, layout, params })
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn init<R: Rng + ?Sized>(dims: PolicyDims, rng: &mut R) -> Result<Self, PolicyError> {
        let mut p = Self::zeros(dims)?;
        let layers: Vec<Dense> = p.layers().collect();
        for d in layers {
            let bound = 1.0 / (d.fan_in as f64).sqrt();
            for w in &mut p.params[d.weights()] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(p)
    }

    pub fn from_flat(dims: PolicyDims, params: Vec<f64>) -> Result<Self, PolicyError> {
        let mut p = Self::zeros(dims)?;
        if params.len() != p.params.len() {
            return Err(PolicyError::Shape(format!(
                "expected {} parameters, got {}",
                p.params.len(),
                params.len()
            )));
        }
        p.params = params;
        Ok(p)
    }

    fn layers(&self) -> impl Iterator<Item = Dense> + '_ {
        let l = &self.layout;
        l.actor_trunk
            .iter()
            .copied()
            .chain([l.actor_head])
            .chain(l.critic_trunk.iter().copied())
            .chain([l.critic_head])
    }

    pub fn dims(&self) -> &PolicyDims {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims.input
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.params
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward_cached(&self, state: &[f64]) -> Result<ForwardCache, PolicyError> {
        if state.len() != self.dims.input {
            return Err(PolicyError::Shape(format!(
                "state has {} entries, network expects {}",
                state.len(),
                self.dims.input
            )));
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(PolicyError::NonFinite("state contains non-finite values".into()));
        }
        let trunk = |layers: &[Dense]| {
            let mut acts = Vec::with_capacity(layers.len());
            let mut x = state.to_vec();
            for d in layers {
                let mut z = Vec::with_capacity(d.fan_out);
                d.forward(&self.params, &x, &mut z);
                z.iter_mut().for_each(|v| *v = v.tanh());
                acts.push(z.clone());
                x = z;
            }
            acts
        };
        let actor_acts = trunk(&self.layout.actor_trunk);
        let critic_acts = if self.dims.shared_trunk { Vec::new() } else { trunk(&self.layout.critic_trunk) };

        let mut out = Vec::with_capacity(NUM_ACTIONS);
        self.layout.actor_head.forward(&self.params, actor_acts.last().expect("non-empty"), &mut out);
        let mut logits = [0.0; NUM_ACTIONS];
        logits.copy_from_slice(&out);
        let probs = softmax(&logits);

        let critic_in = if self.dims.shared_trunk { &actor_acts } else { &critic_acts };
        self.layout.critic_head.forward(&self.params, critic_in.last().expect("non-empty"), &mut out);
        let value = out[0];

        if !(value.is_finite() && probs.iter().all(|p| p.is_finite())) {
            return Err(PolicyError::NonFinite("network output is not finite".into()));
        }
        Ok(ForwardCache { input: state.to_vec(), actor_acts, critic_acts, logits, probs, value })
    }

    /// Action probabilities and value estimate for one state.
    pub fn forward(&self, state: &[f64]) -> Result<([f64; NUM_ACTIONS], f64), PolicyError> {
        let c = self.forward_cached(state)?;
        Ok((c.probs, c.value))
    }

    /// Backpropagates `dlogits` and `dvalue` through the network and adds
    /// the parameter gradients into `grads`.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &[f64; NUM_ACTIONS], dvalue: f64, grads: &mut [f64]) {
        debug_assert_eq!(grads.len(), self.params.len());
        let l = &self.layout;
        let actor_top = cache.actor_acts.last().expect("non-empty");
        let mut d_actor = l.actor_head.backward(&self.params, actor_top, dlogits, grads);

        if self.dims.shared_trunk {
            let dc = l.critic_head.backward(&self.params, actor_top, &[dvalue], grads);
            d_actor.iter_mut().zip(dc).for_each(|(a, b)| *a += b);
        } else {
            let critic_top = cache.critic_acts.last().expect("non-empty");
            let dc = l.critic_head.backward(&self.params, critic_top, &[dvalue], grads);
            self.trunk_backward(&l.critic_trunk, &cache.critic_acts, &cache.input, dc, grads);
        }
        self.trunk_backward(&l.actor_trunk, &cache.actor_acts, &cache.input, d_actor, grads);
    }

    fn trunk_backward(&self, layers: &[Dense], acts: &[Vec<f64>], input: &[f64], mut dh: Vec<f64>, grads: &mut [f64]) {
        for (i, d) in layers.iter().enumerate().rev() {
            // through tanh
            dh.iter_mut().zip(&acts[i]).for_each(|(g, a)| *g *= 1.0 - a * a);
            let x = if i == 0 { input } else { &acts[i - 1] };
            dh = d.backward(&self.params, x, &dh, grads);
        }
    }
}

pub fn softmax(logits: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_ACTIONS];
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    out
}

/// `log softmax`, computed stably.
pub fn log_softmax(logits: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let mut out = [0.0; NUM_ACTIONS];
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = l - lse;
    }
    out
}
