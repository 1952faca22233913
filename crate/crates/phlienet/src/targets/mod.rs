//! Forecaster architectures: the causal dilated temporal CNN (hypernetwork
//! target and TCNN-A baseline), the LSTM, and the FFNN, with the exact
//! flattened weight layout a weight generator must produce.
//!
//! History windows are oldest-first everywhere. All forwards are pure
//! functions of (spec, weights, window) and are also available as graph
//! builders so gradients flow through them during training.

use crate::diffcore::{Graph, NodeId, Tensor};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    TcnnCd,
    Lstm,
    Ffnn,
}

/// Architecture descriptor for one forecaster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    /// D_x, or D_x + D_p for state-augmented variants.
    pub input_dim: usize,
    /// Always D_x: the predicted derivative dimension.
    pub output_dim: usize,
    /// Input sequence length (the FFNN consumes only the newest sample).
    pub isl: usize,
    /// Convolution kernel size (tcnn).
    pub kernel: usize,
    /// Hidden channel count (tcnn).
    pub channels: usize,
    /// Hidden units (lstm).
    pub hidden: usize,
    /// Hidden widths (ffnn).
    pub hidden_layers: Vec<usize>,
}

impl TargetSpec {
    pub fn tcnn_cd(input_dim: usize, output_dim: usize, isl: usize, channels: usize, kernel: usize) -> Self {
        assert!(kernel >= 2, "tcnn kernel must be >= 2");
        TargetSpec {
            kind: TargetKind::TcnnCd,
            input_dim,
            output_dim,
            isl,
            kernel,
            channels,
            hidden: 0,
            hidden_layers: vec![],
        }
    }

    pub fn lstm(input_dim: usize, output_dim: usize, isl: usize, hidden: usize) -> Self {
        TargetSpec {
            kind: TargetKind::Lstm,
            input_dim,
            output_dim,
            isl,
            kernel: 0,
            channels: 0,
            hidden,
            hidden_layers: vec![],
        }
    }

    pub fn ffnn(input_dim: usize, output_dim: usize, isl: usize, hidden_layers: Vec<usize>) -> Self {
        TargetSpec {
            kind: TargetKind::Ffnn,
            input_dim,
            output_dim,
            isl,
            kernel: 0,
            channels: 0,
            hidden: 0,
            hidden_layers,
        }
    }

    /// Convolution layer count for this spec.
    pub fn layers(&self) -> usize {
        tcnn_layers_for(self.isl, self.kernel)
    }
}

/// Receptive field of an `layers`-deep dilated stack: 1 + (k-1)(2^L - 1).
pub fn receptive_field(layers: usize, kernel: usize) -> usize {
    1 + (kernel - 1) * ((1usize << layers) - 1)
}

/// Minimal layer count whose receptive field covers `isl` (at least one
/// layer; ISL = 1 is the degenerate floor case).
pub fn tcnn_layers_for(isl: usize, kernel: usize) -> usize {
    assert!(isl >= 1 && kernel >= 2);
    let mut layers = 1;
    while receptive_field(layers, kernel) < isl {
        layers += 1;
    }
    layers
}

/// One named tensor inside the flattened weight vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

/// Ordered, contiguous, non-overlapping layout covering [0, total).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightLayout {
    pub entries: Vec<LayoutEntry>,
    pub total: usize,
}

impl WeightLayout {
    pub fn entry(&self, name: &str) -> &LayoutEntry {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .unwrap_or_else(|| panic!("no layout entry {name}"))
    }
}

/// Deterministic layout derived from a [`TargetSpec`].
pub fn layout_for(spec: &TargetSpec) -> WeightLayout {
    let mut entries = Vec::new();
    let mut offset = 0;
    let mut push = |name: String, shape: Vec<usize>, offset: &mut usize| {
        let len: usize = shape.iter().product();
        entries.push(LayoutEntry { name, shape, offset: *offset });
        *offset += len;
    };
    match spec.kind {
        TargetKind::TcnnCd => {
            let layers = spec.layers();
            let mut cin = spec.input_dim;
            for i in 0..layers {
                push(format!("conv{i}.kernel"), vec![spec.channels, cin, spec.kernel], &mut offset);
                push(format!("conv{i}.bias"), vec![spec.channels], &mut offset);
                cin = spec.channels;
            }
            push("head.weight".into(), vec![spec.channels, spec.output_dim], &mut offset);
            push("head.bias".into(), vec![spec.output_dim], &mut offset);
        }
        TargetKind::Lstm => {
            let h = spec.hidden;
            push("lstm.w_x".into(), vec![spec.input_dim, 4 * h], &mut offset);
            push("lstm.w_h".into(), vec![h, 4 * h], &mut offset);
            push("lstm.bias".into(), vec![4 * h], &mut offset);
            push("readout.weight".into(), vec![h, spec.output_dim], &mut offset);
            push("readout.bias".into(), vec![spec.output_dim], &mut offset);
        }
        TargetKind::Ffnn => {
            let mut din = spec.input_dim;
            for (i, &w) in spec.hidden_layers.iter().enumerate() {
                push(format!("fc{i}.weight"), vec![din, w], &mut offset);
                push(format!("fc{i}.bias"), vec![w], &mut offset);
                din = w;
            }
            push("out.weight".into(), vec![din, spec.output_dim], &mut offset);
            push("out.bias".into(), vec![spec.output_dim], &mut offset);
        }
    }
    WeightLayout { entries, total: offset }
}

/// Exact trainable scalar count of the target network.
pub fn target_param_count(spec: &TargetSpec) -> usize {
    layout_for(spec).total
}

/// A flattened weight vector together with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    pub flat: Vec<f64>,
    pub layout: WeightLayout,
}

impl WeightVector {
    pub fn new(flat: Vec<f64>, layout: WeightLayout) -> Self {
        assert_eq!(flat.len(), layout.total, "weight vector length vs layout");
        WeightVector { flat, layout }
    }

    pub fn zeros(spec: &TargetSpec) -> Self {
        let layout = layout_for(spec);
        WeightVector { flat: vec![0.0; layout.total], layout }
    }

    /// Copy of the named tensor.
    pub fn tensor(&self, name: &str) -> Tensor {
        let e = self.layout.entry(name);
        let len: usize = e.shape.iter().product();
        Tensor::from_vec(&e.shape, self.flat[e.offset..e.offset + len].to_vec())
    }

    /// Named views of every tensor (unpack).
    pub fn unpack(&self) -> Vec<(String, Tensor)> {
        self.layout.entries.iter().map(|e| (e.name.clone(), self.tensor(&e.name))).collect()
    }

    /// Inverse of [`unpack`](Self::unpack): bit-exact for matching layouts.
    pub fn pack(layout: &WeightLayout, tensors: &[(String, Tensor)]) -> Self {
        let mut flat = vec![0.0; layout.total];
        for (name, t) in tensors {
            let e = layout.entry(name);
            assert_eq!(e.shape, t.shape(), "shape mismatch packing {name}");
            flat[e.offset..e.offset + t.len()].copy_from_slice(t.data());
        }
        WeightVector { flat, layout: layout.clone() }
    }
}

/// Graph node per named weight tensor.
pub struct TargetNodes {
    entries: Vec<(String, NodeId)>,
}

impl TargetNodes {
    pub fn node(&self, name: &str) -> NodeId {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .unwrap_or_else(|| panic!("no weight node {name}"))
            .1
    }

    /// Carves a flat weight-vector node into named tensors per the layout.
    pub fn from_flat(g: &mut Graph, layout: &WeightLayout, flat: NodeId) -> Self {
        let entries = layout
            .entries
            .iter()
            .map(|e| (e.name.clone(), g.slice(flat, e.offset, &e.shape)))
            .collect();
        TargetNodes { entries }
    }

    /// Uses existing graph leaves (baseline models own their weights directly).
    pub fn from_nodes(entries: Vec<(String, NodeId)>) -> Self {
        TargetNodes { entries }
    }
}

/// Dilated conv stack with SiLU after every hidden layer and an affine head
/// read at the final time position. Input is (batch, input_dim, T).
pub fn tcnn_forward_graph(g: &mut Graph, spec: &TargetSpec, w: &TargetNodes, input: NodeId) -> NodeId {
    let layers = spec.layers();
    let mut h = input;
    for i in 0..layers {
        let conv = g.causal_conv(h, w.node(&format!("conv{i}.kernel")), w.node(&format!("conv{i}.bias")), 1 << i);
        h = g.silu(conv);
    }
    let last = g.last_time(h);
    let proj = g.matmul(last, w.node("head.weight"));
    g.add_bias(proj, w.node("head.bias"))
}

/// Gate equations iterated over the window (h0 = c0 = 0), affine readout from
/// the final hidden state. `steps` holds one (batch, input_dim) node per time
/// step, oldest first. Gate column order is [input, forget, output, cell].
pub fn lstm_forward_graph(g: &mut Graph, spec: &TargetSpec, w: &TargetNodes, steps: &[NodeId]) -> NodeId {
    let hd = spec.hidden;
    let batch = g.shape(steps[0])[0];
    let mut h = g.constant(Tensor::zeros(&[batch, hd]));
    let mut c = g.constant(Tensor::zeros(&[batch, hd]));
    for &x in steps {
        let xa = g.matmul(x, w.node("lstm.w_x"));
        let ha = g.matmul(h, w.node("lstm.w_h"));
        let s = g.add(xa, ha);
        let pre = g.add_bias(s, w.node("lstm.bias"));
        let i_s = g.slice_cols(pre, 0, hd);
        let f_s = g.slice_cols(pre, hd, hd);
        let o_s = g.slice_cols(pre, 2 * hd, hd);
        let c_s = g.slice_cols(pre, 3 * hd, hd);
        let i_g = g.sigmoid(i_s);
        let f_g = g.sigmoid(f_s);
        let o_g = g.sigmoid(o_s);
        let cand = g.tanh(c_s);
        let fc = g.mul(f_g, c);
        let ic = g.mul(i_g, cand);
        c = g.add(fc, ic);
        let tc = g.tanh(c);
        h = g.mul(o_g, tc);
    }
    let proj = g.matmul(h, w.node("readout.weight"));
    g.add_bias(proj, w.node("readout.bias"))
}

/// affine–SiLU–…–affine on a (batch, input_dim) node.
pub fn ffnn_forward_graph(g: &mut Graph, spec: &TargetSpec, w: &TargetNodes, input: NodeId) -> NodeId {
    let mut h = input;
    for i in 0..spec.hidden_layers.len() {
        let a = g.matmul(h, w.node(&format!("fc{i}.weight")));
        let b = g.add_bias(a, w.node(&format!("fc{i}.bias")));
        h = g.silu(b);
    }
    let a = g.matmul(h, w.node("out.weight"));
    g.add_bias(a, w.node("out.bias"))
}

fn check_history(spec: &TargetSpec, history: &[f64]) -> Result<()> {
    let want = spec.isl * spec.input_dim;
    if history.len() != want {
        return Err(Error::Shape(format!(
            "history holds {} scalars, expected ISL x input_dim = {} x {} = {want}",
            history.len(),
            spec.isl,
            spec.input_dim
        )));
    }
    Ok(())
}

/// (ISL, input_dim) oldest-first rows -> (1, input_dim, ISL) channel-major.
fn window_to_channels(spec: &TargetSpec, history: &[f64]) -> Tensor {
    let (isl, d) = (spec.isl, spec.input_dim);
    let mut data = vec![0.0; d * isl];
    for t in 0..isl {
        for c in 0..d {
            data[c * isl + t] = history[t * d + c];
        }
    }
    Tensor::from_vec(&[1, d, isl], data)
}

/// Derivative estimate from one history window (oldest first).
pub fn tcnn_forward(spec: &TargetSpec, w: &WeightVector, history: &[f64]) -> Result<Vec<f64>> {
    check_history(spec, history)?;
    let mut g = Graph::new();
    let input = g.constant(window_to_channels(spec, history));
    let flat = g.constant(Tensor::from_vec(&[w.flat.len()], w.flat.clone()));
    let nodes = TargetNodes::from_flat(&mut g, &w.layout, flat);
    let out = tcnn_forward_graph(&mut g, spec, &nodes, input);
    Ok(g.value(out).data().to_vec())
}

pub fn lstm_forward(spec: &TargetSpec, w: &WeightVector, history: &[f64]) -> Result<Vec<f64>> {
    check_history(spec, history)?;
    let mut g = Graph::new();
    let steps: Vec<NodeId> = (0..spec.isl)
        .map(|t| {
            let row = history[t * spec.input_dim..(t + 1) * spec.input_dim].to_vec();
            g.constant(Tensor::from_vec(&[1, spec.input_dim], row))
        })
        .collect();
    let flat = g.constant(Tensor::from_vec(&[w.flat.len()], w.flat.clone()));
    let nodes = TargetNodes::from_flat(&mut g, &w.layout, flat);
    let out = lstm_forward_graph(&mut g, spec, &nodes, &steps);
    Ok(g.value(out).data().to_vec())
}

pub fn ffnn_forward(spec: &TargetSpec, w: &WeightVector, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != spec.input_dim {
        return Err(Error::Shape(format!(
            "ffnn input holds {} scalars, expected {}",
            input.len(),
            spec.input_dim
        )));
    }
    let mut g = Graph::new();
    let x = g.constant(Tensor::from_vec(&[1, spec.input_dim], input.to_vec()));
    let flat = g.constant(Tensor::from_vec(&[w.flat.len()], w.flat.clone()));
    let nodes = TargetNodes::from_flat(&mut g, &w.layout, flat);
    let out = ffnn_forward_graph(&mut g, spec, &nodes, x);
    Ok(g.value(out).data().to_vec())
}

/// Single-window forward for any kind; the FFNN consumes only the newest row.
pub fn forward(spec: &TargetSpec, w: &WeightVector, history: &[f64]) -> Result<Vec<f64>> {
    match spec.kind {
        TargetKind::TcnnCd => tcnn_forward(spec, w, history),
        TargetKind::Lstm => lstm_forward(spec, w, history),
        TargetKind::Ffnn => {
            check_history(spec, history)?;
            ffnn_forward(spec, w, &history[history.len() - spec.input_dim..])
        }
    }
}
