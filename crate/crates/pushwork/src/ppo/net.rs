//! Two-head policy/value network with hand-written backpropagation.
//!
//! Shared trunk of two tanh layers feeding an action-logits head and a
//! scalar value head. Gradients are accumulated explicitly so the whole
//! trainer stays dependency-free and checkable against finite differences.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const HIDDEN: usize = 64;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    /// out = self * x
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x.iter()) {
                acc += w * xv;
            }
            out[r] = acc;
        }
    }
}

/// All weights and biases of the policy/value network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w_pi: Matrix,
    pub b_pi: Vec<f64>,
    pub w_v: Matrix,
    pub b_v: Vec<f64>,
}

/// Activations cached by a forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(obs_len: usize, n_actions: usize) -> Self {
        Self {
            w1: Matrix::zeros(HIDDEN, obs_len),
            b1: vec![0.0; HIDDEN],
            w2: Matrix::zeros(HIDDEN, HIDDEN),
            b2: vec![0.0; HIDDEN],
            w_pi: Matrix::zeros(n_actions, HIDDEN),
            b_pi: vec![0.0; n_actions],
            w_v: Matrix::zeros(1, HIDDEN),
            b_v: vec![0.0; 1],
        }
    }

    /// Xavier-uniform trunk; policy head scaled down so the initial policy
    /// is near uniform; unit-scale value head.
    pub fn init(obs_len: usize, n_actions: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(obs_len, n_actions);
        init_matrix(&mut p.w1, rng, 1.0);
        init_matrix(&mut p.w2, rng, 1.0);
        init_matrix(&mut p.w_pi, rng, 0.01);
        init_matrix(&mut p.w_v, rng, 1.0);
        p
    }

    pub fn obs_len(&self) -> usize {
        self.w1.cols
    }

    pub fn n_actions(&self) -> usize {
        self.w_pi.rows
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.obs_len(), self.n_actions())
    }

    /// Named views over every parameter tensor, in a fixed order. Biases
    /// are column vectors.
    pub fn tensor_views(&self) -> Vec<(&'static str, &[f64], (usize, usize))> {
        vec![
            ("w1", self.w1.data.as_slice(), (self.w1.rows, self.w1.cols)),
            ("b1", self.b1.as_slice(), (self.b1.len(), 1)),
            ("w2", self.w2.data.as_slice(), (self.w2.rows, self.w2.cols)),
            ("b2", self.b2.as_slice(), (self.b2.len(), 1)),
            (
                "w_pi",
                self.w_pi.data.as_slice(),
                (self.w_pi.rows, self.w_pi.cols),
            ),
            ("b_pi", self.b_pi.as_slice(), (self.b_pi.len(), 1)),
            (
                "w_v",
                self.w_v.data.as_slice(),
                (self.w_v.rows, self.w_v.cols),
            ),
            ("b_v", self.b_v.as_slice(), (self.b_v.len(), 1)),
        ]
    }

    pub fn tensor_views_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w1", self.w1.data.as_mut_slice()),
            ("b1", self.b1.as_mut_slice()),
            ("w2", self.w2.data.as_mut_slice()),
            ("b2", self.b2.as_mut_slice()),
            ("w_pi", self.w_pi.data.as_mut_slice()),
            ("b_pi", self.b_pi.as_mut_slice()),
            ("w_v", self.w_v.data.as_mut_slice()),
            ("b_v", self.b_v.as_mut_slice()),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensor_views().iter().map(|(_, s, _)| s.len()).sum()
    }

    pub fn set_zero(&mut self) {
        for (_, s) in self.tensor_views_mut() {
            s.fill(0.0);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensor_views()
            .iter()
            .all(|(_, s, _)| s.iter().all(|v| v.is_finite()))
    }

    /// Policy logits and state value for one observation.
    pub fn forward(&self, obs: &[f64]) -> (Vec<f64>, f64) {
        let cache = self.forward_cached(obs);
        self.heads(&cache)
    }

    pub fn forward_cached(&self, obs: &[f64]) -> ForwardCache {
        assert_eq!(
            obs.len(),
            self.obs_len(),
            "observation length does not match the network input"
        );
        let mut h1 = vec![0.0; HIDDEN];
        self.w1.matvec(obs, &mut h1);
        for (h, b) in h1.iter_mut().zip(self.b1.iter()) {
            *h = (*h + b).tanh();
        }
        let mut h2 = vec![0.0; HIDDEN];
        self.w2.matvec(&h1, &mut h2);
        for (h, b) in h2.iter_mut().zip(self.b2.iter()) {
            *h = (*h + b).tanh();
        }
        ForwardCache {
            input: obs.to_vec(),
            h1,
            h2,
        }
    }

    pub fn heads(&self, cache: &ForwardCache) -> (Vec<f64>, f64) {
        let mut logits = vec![0.0; self.n_actions()];
        self.w_pi.matvec(&cache.h2, &mut logits);
        for (l, b) in logits.iter_mut().zip(self.b_pi.iter()) {
            *l += b;
        }
        let mut value = self.b_v[0];
        for (w, h) in self.w_v.data.iter().zip(cache.h2.iter()) {
            value += w * h;
        }
        (logits, value)
    }

    /// Accumulate gradients of a scalar loss into `grads`, given the loss
    /// gradient at the heads (`d_logits`, `d_value`).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_logits: &[f64],
        d_value: f64,
        grads: &mut PolicyParams,
    ) {
        let n_actions = self.n_actions();
        debug_assert_eq!(d_logits.len(), n_actions);

        let mut d_h2 = vec![0.0; HIDDEN];
        // Value head.
        grads.b_v[0] += d_value;
        for j in 0..HIDDEN {
            grads.w_v.data[j] += d_value * cache.h2[j];
            d_h2[j] += self.w_v.data[j] * d_value;
        }
        // Policy head.
        for a in 0..n_actions {
            let da = d_logits[a];
            if da != 0.0 {
                grads.b_pi[a] += da;
                for j in 0..HIDDEN {
                    *grads.w_pi.at_mut(a, j) += da * cache.h2[j];
                    d_h2[j] += self.w_pi.at(a, j) * da;
                }
            }
        }
        // Second trunk layer (tanh).
        let mut d_h1 = vec![0.0; HIDDEN];
        for j in 0..HIDDEN {
            let dz = d_h2[j] * (1.0 - cache.h2[j] * cache.h2[j]);
            if dz != 0.0 {
                grads.b2[j] += dz;
                for k in 0..HIDDEN {
                    *grads.w2.at_mut(j, k) += dz * cache.h1[k];
                    d_h1[k] += self.w2.at(j, k) * dz;
                }
            }
        }
        // First trunk layer.
        let obs_len = self.obs_len();
        for j in 0..HIDDEN {
            let dz = d_h1[j] * (1.0 - cache.h1[j] * cache.h1[j]);
            if dz != 0.0 {
                grads.b1[j] += dz;
                for k in 0..obs_len {
                    *grads.w1.at_mut(j, k) += dz * cache.input[k];
                }
            }
        }
    }

    /// In-place `self += other * scale`.
    pub fn add_scaled(&mut self, other: &PolicyParams, scale: f64) {
        for ((_, dst), (_, src, _)) in self
            .tensor_views_mut()
            .into_iter()
            .zip(other.tensor_views())
        {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += s * scale;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, s) in self.tensor_views_mut() {
            for v in s.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.tensor_views()
            .iter()
            .map(|(_, s, _)| s.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

fn init_matrix(m: &mut Matrix, rng: &mut impl Rng, gain: f64) {
    let limit = gain * (6.0 / (m.rows + m.cols) as f64).sqrt();
    for v in m.data.iter_mut() {
        *v = rng.gen_range(-limit..limit);
    }
}

/// Clip a gradient to a maximum global L2 norm. Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut PolicyParams, max_norm: f64) -> f64 {
    let norm = grads.grad_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Adam with bias correction, one moment pair per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: PolicyParams,
    pub v: PolicyParams,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &PolicyParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut PolicyParams, grads: &PolicyParams, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((_, p), (_, g, _)), ((_, m), (_, v))) in params
            .tensor_views_mut()
            .into_iter()
            .zip(grads.tensor_views())
            .zip(
                self.m
                    .tensor_views_mut()
                    .into_iter()
                    .zip(self.v.tensor_views_mut()),
            )
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
