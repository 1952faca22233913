//! Learned Interpolated Embedding: a normalized parameter is mapped to a
//! convex combination of learnable anchor embeddings through an RBF-softmax
//! kernel. Anchors sit at fixed uniform positions in [0,1]; only the
//! embedding vectors train.

use crate::diffcore::{Graph, NodeId, Tensor};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// Anchor positions, their embedding vectors, and the kernel bandwidth.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorBank {
    pub n_anchors: usize,
    pub embedding_dim: usize,
    /// (i-1)/(N_e-1): uniform in [0,1], strictly increasing.
    pub positions: Vec<f64>,
    /// (N_e, D_e); the trainable weights of this layer.
    pub embeddings: Tensor,
    pub bandwidth: f64,
    /// (lo, hi) of the training parameter range.
    pub param_norm: [f64; 2],
}

/// Checkpoint-side description (embeddings live in the weight blob).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieSpec {
    pub n_anchors: usize,
    pub embedding_dim: usize,
    pub bandwidth: f64,
}

impl LieSpec {
    pub fn new(n_anchors: usize, embedding_dim: usize, bandwidth: f64) -> Self {
        LieSpec { n_anchors, embedding_dim, bandwidth }
    }
}

pub fn anchor_positions(n_anchors: usize) -> Vec<f64> {
    assert!(n_anchors >= 2, "need at least two anchors");
    (0..n_anchors).map(|i| i as f64 / (n_anchors - 1) as f64).collect()
}

impl AnchorBank {
    /// Embeddings drawn from N(0, 1/sqrt(D_e)) so they feed a standard MLP at
    /// unit scale.
    pub fn init(spec: &LieSpec, param_norm: [f64; 2], seed: u64) -> Self {
        assert!(spec.bandwidth > 0.0, "bandwidth must be positive");
        let mut rng = Rng::stream(seed, 0x11e, 0, 0);
        let std = 1.0 / (spec.embedding_dim as f64).sqrt();
        let data: Vec<f64> = (0..spec.n_anchors * spec.embedding_dim)
            .map(|_| rng.normal() * std)
            .collect();
        AnchorBank {
            n_anchors: spec.n_anchors,
            embedding_dim: spec.embedding_dim,
            positions: anchor_positions(spec.n_anchors),
            embeddings: Tensor::from_vec(&[spec.n_anchors, spec.embedding_dim], data),
            bandwidth: spec.bandwidth,
            param_norm,
        }
    }

    pub fn with_embeddings(mut self, e: Tensor) -> Self {
        assert_eq!(e.shape(), &[self.n_anchors, self.embedding_dim]);
        self.embeddings = e;
        self
    }

    /// Affine map of a raw parameter onto the training range; extrapolation
    /// queries legitimately fall outside [0,1] and pass through unclamped.
    pub fn normalize_param(&self, p_raw: f64) -> f64 {
        let [lo, hi] = self.param_norm;
        (p_raw - lo) / (hi - lo)
    }

    /// softmax_i of -(p - p_i)^2 / (2 sigma^2), computed with max-subtraction.
    /// Strictly positive, sums to one.
    pub fn rbf_weights(&self, p_norm: f64) -> Vec<f64> {
        let two_s2 = 2.0 * self.bandwidth * self.bandwidth;
        let logits: Vec<f64> =
            self.positions.iter().map(|&pi| -((p_norm - pi) * (p_norm - pi)) / two_s2).collect();
        softmax(&logits)
    }

    /// e(p) = sum_i alpha_i(p) e_i.
    pub fn embed(&self, p_raw: f64) -> Vec<f64> {
        let alphas = self.rbf_weights(self.normalize_param(p_raw));
        self.combine(&alphas)
    }

    fn combine(&self, alphas: &[f64]) -> Vec<f64> {
        let d = self.embedding_dim;
        let mut out = vec![0.0; d];
        let ed = self.embeddings.data();
        for (i, &a) in alphas.iter().enumerate() {
            for c in 0..d {
                out[c] += a * ed[i * d + c];
            }
        }
        out
    }

    /// Analytic (e(p), de/dp_raw). The kernel derivative is
    /// d alpha_i / dp = alpha_i (s_i - sum_k alpha_k s_k) with
    /// s_i = -(p - p_i) / sigma^2, chained through the normalization.
    pub fn embed_with_param_grad(&self, p_raw: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.normalize_param(p_raw);
        let alphas = self.rbf_weights(p);
        let s2 = self.bandwidth * self.bandwidth;
        let s: Vec<f64> = self.positions.iter().map(|&pi| -(p - pi) / s2).collect();
        let mean_s: f64 = alphas.iter().zip(&s).map(|(&a, &si)| a * si).sum();
        let dalpha: Vec<f64> =
            alphas.iter().zip(&s).map(|(&a, &si)| a * (si - mean_s)).collect();
        let e = self.combine(&alphas);
        let mut de = self.combine(&dalpha);
        let scale = 1.0 / (self.param_norm[1] - self.param_norm[0]);
        for v in &mut de {
            *v *= scale;
        }
        (e, de)
    }

    /// Graph version: coefficients are data (p is an input), the embedding
    /// matrix node carries the gradient. Returns a (1, D_e) node.
    pub fn embed_graph(&self, g: &mut Graph, embeddings: NodeId, p_raw: f64) -> NodeId {
        let alphas = self.rbf_weights(self.normalize_param(p_raw));
        g.weighted_row_sum(embeddings, &alphas)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
