//! First-order optimizers over a ParameterStore: Adam, and the
//! RAdam + Lookahead combination used as the "ranger-like" option.

use crate::diffcore::ParameterStore;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    #[serde(rename = "adam")]
    Adam,
    #[serde(rename = "ranger-like")]
    RangerLike,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
const LOOKAHEAD_K: usize = 6;
const LOOKAHEAD_ALPHA: f64 = 0.5;

pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    t: u64,
    m: ParameterStore,
    v: ParameterStore,
    slow: Option<ParameterStore>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ParameterStore) -> Self {
        Optimizer {
            kind,
            lr,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
            slow: match kind {
                OptimizerKind::RangerLike => Some(params.clone()),
                OptimizerKind::Adam => None,
            },
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step(&mut self, params: &mut ParameterStore, grads: &ParameterStore) {
        self.t += 1;
        let t = self.t as f64;
        let bc1 = 1.0 - BETA1.powf(t);
        let bc2 = 1.0 - BETA2.powf(t);

        // RAdam rectification term (only consulted for RangerLike)
        let rho_inf = 2.0 / (1.0 - BETA2) - 1.0;
        let beta2_t = BETA2.powf(t);
        let rho_t = rho_inf - 2.0 * t * beta2_t / (1.0 - beta2_t);
        let rect = if rho_t > 4.0 {
            Some(
                (((rho_t - 4.0) * (rho_t - 2.0) * rho_inf)
                    / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                    .sqrt(),
            )
        } else {
            None
        };

        let names: Vec<String> = params.names().map(str::to_string).collect();
        for name in &names {
            let g = grads.get(name).expect("grads must mirror params").data().to_vec();
            let m = self.m.get_mut(name).unwrap().data_mut();
            for (mi, gi) in m.iter_mut().zip(&g) {
                *mi = BETA1 * *mi + (1.0 - BETA1) * gi;
            }
            let m_snapshot = m.to_vec();
            let v = self.v.get_mut(name).unwrap().data_mut();
            for (vi, gi) in v.iter_mut().zip(&g) {
                *vi = BETA2 * *vi + (1.0 - BETA2) * gi * gi;
            }
            let p = params.get_mut(name).unwrap().data_mut();
            match self.kind {
                OptimizerKind::Adam => {
                    for i in 0..p.len() {
                        let mhat = m_snapshot[i] / bc1;
                        let vhat = v[i] / bc2;
                        p[i] -= self.lr * mhat / (vhat.sqrt() + EPS);
                    }
                }
                OptimizerKind::RangerLike => {
                    for i in 0..p.len() {
                        let mhat = m_snapshot[i] / bc1;
                        match rect {
                            Some(r) => {
                                let vhat = v[i] / bc2;
                                p[i] -= self.lr * r * mhat / (vhat.sqrt() + EPS);
                            }
                            None => p[i] -= self.lr * mhat,
                        }
                    }
                }
            }
        }

        if let Some(slow) = &mut self.slow {
            if self.t % LOOKAHEAD_K as u64 == 0 {
                for name in &names {
                    let s = slow.get_mut(name).unwrap().data_mut();
                    let p = params.get_mut(name).unwrap().data_mut();
                    for i in 0..p.len() {
                        s[i] += LOOKAHEAD_ALPHA * (p[i] - s[i]);
                        p[i] = s[i];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{value_and_grad, Tensor};

    fn quadratic_store(x: &[f64]) -> ParameterStore {
        let mut s = ParameterStore::new();
        s.insert("x", Tensor::from_vec(&[x.len()], x.to_vec()));
        s
    }

    fn quad_loss(params: &ParameterStore) -> (f64, ParameterStore) {
        value_and_grad(
            |g, p| {
                let s = g.square(p.node("x"));
                g.sum(s)
            },
            params,
        )
        .unwrap()
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut params = quadratic_store(&[3.0, -2.0, 0.7]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.05, &params);
        let (l0, _) = quad_loss(&params);
        for _ in 0..400 {
            let (_, g) = quad_loss(&params);
            opt.step(&mut params, &g);
        }
        let (l1, _) = quad_loss(&params);
        assert!(l1 < l0 * 1e-4, "loss {l0} -> {l1}");
    }

    #[test]
    fn ranger_like_descends_a_quadratic() {
        // lookahead halves per-cycle progress, so give it a longer run
        let mut params = quadratic_store(&[3.0, -2.0, 0.7]);
        let mut opt = Optimizer::new(OptimizerKind::RangerLike, 0.05, &params);
        let (l0, _) = quad_loss(&params);
        for _ in 0..2000 {
            let (_, g) = quad_loss(&params);
            opt.step(&mut params, &g);
        }
        let (l1, _) = quad_loss(&params);
        assert!(l1 < l0 * 1e-3, "loss {l0} -> {l1}");
    }

    #[test]
    fn adam_first_step_size_is_lr() {
        // with bias correction, |delta| of the very first step is ~lr
        let mut params = quadratic_store(&[1.0]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01, &params);
        let (_, g) = quad_loss(&params);
        opt.step(&mut params, &g);
        let x = params.get("x").unwrap().data()[0];
        assert!((1.0 - x - 0.01).abs() < 1e-6, "step {}", 1.0 - x);
    }

    #[test]
    fn lookahead_pulls_back_toward_slow_weights() {
        let mut params = quadratic_store(&[1.0]);
        let mut opt = Optimizer::new(OptimizerKind::RangerLike, 0.1, &params);
        let mut trail = Vec::new();
        for _ in 0..LOOKAHEAD_K {
            let (_, g) = quad_loss(&params);
            opt.step(&mut params, &g);
            trail.push(params.get("x").unwrap().data()[0]);
        }
        // after the k-th step the fast weights snap to the interpolation
        let fast_before = trail[LOOKAHEAD_K - 2];
        let after = trail[LOOKAHEAD_K - 1];
        assert!(after > fast_before, "interpolated {after} vs fast path {fast_before}");
    }

    #[test]
    fn deterministic_updates() {
        let run = || {
            let mut params = quadratic_store(&[0.5, -1.5]);
            let mut opt = Optimizer::new(OptimizerKind::Adam, 0.02, &params);
            for _ in 0..25 {
                let (_, g) = quad_loss(&params);
                opt.step(&mut params, &g);
            }
            params.flatten()
        };
        let a = run();
        let b = run();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
