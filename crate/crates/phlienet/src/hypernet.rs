//! MLP mapping an embedding vector to the complete flattened weight vector of
//! the bound target network.

use crate::diffcore::{bind, Graph, NodeId, ParameterStore, Tensor};
use crate::error::{Error, Result};
use crate::lie::AnchorBank;
use crate::rng::Rng;
use crate::targets::{layout_for, TargetSpec, WeightVector};
use serde::{Deserialize, Serialize};

pub const PARAM_PREFIX: &str = "hnn";

/// Shape of the weight-generating MLP. `output_dim` must equal the bound
/// target's exact trainable scalar count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperNetSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl HyperNetSpec {
    /// Two hidden SiLU layers of 64 by default; the output layer is affine
    /// since target weights are unconstrained reals.
    pub fn for_target(embedding_dim: usize, target: &TargetSpec) -> Self {
        HyperNetSpec {
            input_dim: embedding_dim,
            hidden: vec![64, 64],
            output_dim: layout_for(target).total,
        }
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden = hidden;
        self
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::new();
        let mut din = self.input_dim;
        for &h in &self.hidden {
            dims.push((din, h));
            din = h;
        }
        dims.push((din, self.output_dim));
        dims
    }

    pub fn weight_name(i: usize) -> String {
        format!("{PARAM_PREFIX}.fc{i}.weight")
    }

    pub fn bias_name(i: usize) -> String {
        format!("{PARAM_PREFIX}.fc{i}.bias")
    }

    /// Inserts freshly initialized coefficients into `store`. Hidden layers
    /// use fan-in-scaled Gaussians; the final layer is scaled down by the
    /// target depth so generated weights start small, which keeps early
    /// rollouts finite.
    pub fn init_into(&self, store: &mut ParameterStore, target_layer_count: usize, seed: u64) {
        let mut rng = Rng::stream(seed, 0x4e4, 0, 0);
        let dims = self.layer_dims();
        let last = dims.len() - 1;
        for (i, &(din, dout)) in dims.iter().enumerate() {
            let std = if i == last {
                1.0 / ((din * target_layer_count.max(1)) as f64).sqrt()
            } else {
                1.0 / (din as f64).sqrt()
            };
            let w: Vec<f64> = (0..din * dout).map(|_| rng.normal() * std).collect();
            store.insert(&Self::weight_name(i), Tensor::from_vec(&[din, dout], w));
            store.insert(&Self::bias_name(i), Tensor::zeros(&[dout]));
        }
    }

    /// Forward through the MLP on the graph; `e` is a (1, D_e) node and the
    /// result is the (1, |w_f|) generated weight vector.
    pub fn forward_graph(
        &self,
        g: &mut Graph,
        node_of: &dyn Fn(&str) -> NodeId,
        e: NodeId,
    ) -> NodeId {
        assert_eq!(g.shape(e), &[1, self.input_dim], "embedding node shape");
        let dims = self.layer_dims();
        let last = dims.len() - 1;
        let mut h = e;
        for i in 0..dims.len() {
            let a = g.matmul(h, node_of(&Self::weight_name(i)));
            let b = g.add_bias(a, node_of(&Self::bias_name(i)));
            h = if i == last { b } else { g.silu(b) };
        }
        h
    }
}

/// Runs the hypernetwork on a plain embedding and returns the generated
/// flattened weights.
pub fn generate_flat(spec: &HyperNetSpec, store: &ParameterStore, e: &[f64]) -> Result<Vec<f64>> {
    if e.len() != spec.input_dim {
        return Err(Error::Config(format!(
            "embedding has dimension {}, hypernetwork expects {}",
            e.len(),
            spec.input_dim
        )));
    }
    let mut g = Graph::new();
    let bound = bind(&mut g, store);
    let e_node = g.constant(Tensor::from_vec(&[1, spec.input_dim], e.to_vec()));
    let out = spec.forward_graph(&mut g, &|n| bound.node(n), e_node);
    Ok(g.value(out).data().to_vec())
}

/// Generated weights carved into the target's layout.
pub fn generate_weights(
    spec: &HyperNetSpec,
    store: &ParameterStore,
    target: &TargetSpec,
    e: &[f64],
) -> Result<WeightVector> {
    let layout = layout_for(target);
    if layout.total != spec.output_dim {
        return Err(Error::Config(format!(
            "hypernetwork emits {} scalars but the bound target needs {}",
            spec.output_dim, layout.total
        )));
    }
    Ok(WeightVector::new(generate_flat(spec, store, e)?, layout))
}

/// Pairwise L2 distances between the weight vectors generated for each probe
/// parameter. Symmetric with a zero diagonal.
pub fn weight_distance_matrix(
    spec: &HyperNetSpec,
    store: &ParameterStore,
    bank: &AnchorBank,
    probe_params: &[f64],
) -> Result<Vec<Vec<f64>>> {
    assert!(probe_params.len() >= 2, "need at least two probes");
    let weights: Vec<Vec<f64>> = probe_params
        .iter()
        .map(|&p| generate_flat(spec, store, &bank.embed(p)))
        .collect::<Result<_>>()?;
    let m = weights.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d: f64 = weights[i]
                .iter()
                .zip(&weights[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(dist)
}
