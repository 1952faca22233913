//! Scalar-loss evaluation with exact reverse-mode gradients.
//!
//! Everything trainable in this crate lives in a [`ParameterStore`]; losses
//! are built on a [`Graph`] from the registered op set and differentiated by
//! [`value_and_grad`]. All arithmetic is 64-bit; a graph is single-threaded,
//! but distinct stores/graphs can be used concurrently.

mod graph;
mod tensor;

pub use graph::{Graph, NodeId};
pub use tensor::{matmul, Tensor};

use crate::error::{Error, Result};

/// Named f64 tensors with a stable flatten order (insertion order).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    entries: Vec<(String, Tensor)>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) {
        assert!(
            self.index_of(name).is_none(),
            "duplicate parameter name {name}"
        );
        self.entries.push((name.to_string(), tensor));
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index_of(name).map(move |i| &mut self.entries[i].1)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total scalar count over all tensors.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Concatenation of all tensors in insertion order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.scalar_count());
        for (_, t) in &self.entries {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten); shapes and names are kept.
    pub fn unflatten_from(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.scalar_count(), "flat length mismatch");
        let mut out = ParameterStore::new();
        let mut off = 0;
        for (n, t) in &self.entries {
            let len = t.len();
            out.insert(n, Tensor::from_vec(t.shape(), flat[off..off + len].to_vec()));
            off += len;
        }
        out
    }

    /// Same names and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut out = ParameterStore::new();
        for (n, t) in &self.entries {
            out.insert(n, Tensor::zeros(t.shape()));
        }
        out
    }
}

/// Node handles for every tensor of a bound [`ParameterStore`].
pub struct BoundParams {
    ids: Vec<(String, NodeId)>,
}

impl BoundParams {
    pub fn node(&self, name: &str) -> NodeId {
        self.ids
            .iter()
            .find(|(n, _)| n == name)
            .unwrap_or_else(|| panic!("no parameter named {name}"))
            .1
    }
}

/// Registers every tensor of `params` as a trainable leaf on `g`.
pub fn bind(g: &mut Graph, params: &ParameterStore) -> BoundParams {
    let ids = params
        .iter()
        .map(|(n, t)| (n.to_string(), g.param_named(t.clone(), n)))
        .collect();
    BoundParams { ids }
}

/// Evaluates the scalar loss and the gradient of every parameter scalar.
///
/// `loss_fn` must build its computation from the ops on [`Graph`]; the
/// returned store has the same names and shapes as `params`.
pub fn value_and_grad<F>(loss_fn: F, params: &ParameterStore) -> Result<(f64, ParameterStore)>
where
    F: Fn(&mut Graph, &BoundParams) -> NodeId,
{
    let mut g = Graph::new();
    let bound = bind(&mut g, params);
    let loss_id = loss_fn(&mut g, &bound);
    let loss = g.value(loss_id).item();
    if !loss.is_finite() {
        let tensor = g.first_non_finite().unwrap_or_else(|| "loss".to_string());
        return Err(Error::NonFiniteLoss { tensor });
    }
    let grads = g.backward(loss_id);
    let mut out = ParameterStore::new();
    for (name, id) in &bound.ids {
        let shape = params.get(name).unwrap().shape().to_vec();
        let grad = grads[id.idx()].clone().unwrap_or_else(|| Tensor::zeros(&shape));
        out.insert(name, grad);
    }
    Ok((loss, out))
}

/// Evaluates only the loss value (no gradients).
pub fn value_of<F>(loss_fn: F, params: &ParameterStore) -> f64
where
    F: Fn(&mut Graph, &BoundParams) -> NodeId,
{
    let mut g = Graph::new();
    let bound = bind(&mut g, params);
    let loss_id = loss_fn(&mut g, &bound);
    g.value(loss_id).item()
}

/// One scalar's comparison between analytic and central-difference gradients.
#[derive(Clone, Debug)]
pub struct FdEntry {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Report of a full finite-difference sweep.
#[derive(Clone, Debug)]
pub struct FdReport {
    pub worst: FdEntry,
    pub max_rel_err: f64,
    /// Every scalar whose relative error exceeded the tolerance.
    pub failures: Vec<FdEntry>,
    pub checked: usize,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Central finite differences over every scalar of `params`.
///
/// Relative error is |analytic - numeric| / max(1, |analytic|), so small
/// gradients are compared absolutely.
pub fn finite_difference_check<F>(
    loss_fn: F,
    params: &ParameterStore,
    step: f64,
    tolerance: f64,
) -> Result<FdReport>
where
    F: Fn(&mut Graph, &BoundParams) -> NodeId,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let (_, grads) = value_and_grad(&loss_fn, params)?;
    let mut perturbed = params.clone();
    let mut worst: Option<FdEntry> = None;
    let mut failures = Vec::new();
    let mut checked = 0;

    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in &names {
        let len = params.get(name).unwrap().len();
        for i in 0..len {
            let orig = params.get(name).unwrap().data()[i];
            perturbed.get_mut(name).unwrap().data_mut()[i] = orig + step;
            let up = value_of(&loss_fn, &perturbed);
            perturbed.get_mut(name).unwrap().data_mut()[i] = orig - step;
            let down = value_of(&loss_fn, &perturbed);
            perturbed.get_mut(name).unwrap().data_mut()[i] = orig;

            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.get(name).unwrap().data()[i];
            let rel_err = (analytic - numeric).abs() / analytic.abs().max(1.0);
            let entry = FdEntry { name: name.clone(), index: i, analytic, numeric, rel_err };
            if rel_err > tolerance {
                failures.push(entry.clone());
            }
            if worst.as_ref().map_or(true, |w| entry.rel_err > w.rel_err) {
                worst = Some(entry);
            }
            checked += 1;
        }
    }
    let worst = worst.expect("finite_difference_check on empty ParameterStore");
    let max_rel_err = worst.rel_err;
    Ok(FdReport { worst, max_rel_err, failures, checked })
}

#[cfg(test)]
mod tests;
