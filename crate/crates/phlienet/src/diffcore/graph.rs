//! Reverse-mode tape over a closed set of tensor operations.
//!
//! The operation set is a whitelist: affine maps, causal dilated convolution,
//! elementwise sigmoid/tanh/SiLU, products, sums, squared norms, and the
//! slicing needed to carve generated weight vectors into layer tensors.
//! Because ops only exist as methods on [`Graph`], an unregistered operation
//! cannot be constructed; shape mismatches fail at graph-construction time.

use super::tensor::{matmul, matmul_into, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(u32);

impl NodeId {
    pub(crate) fn idx(self) -> usize {
        self.0 as usize
    }
}

enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// (m,n) + (n,) broadcast over rows.
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Silu(NodeId),
    Square(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    /// Contiguous flat slice reinterpreted with a new shape.
    Slice(NodeId, usize),
    /// Column range [start, start+width) of a 2-D node.
    SliceCols(NodeId, usize, usize),
    /// Constant-coefficient combination of the rows of a 2-D node -> (1, cols).
    WeightedRowSum(NodeId, Vec<f64>),
    /// input (B,Cin,T), kernel (Cout,Cin,K), bias (Cout), dilation -> (B,Cout,T).
    CausalConv(NodeId, NodeId, NodeId, usize),
    /// (B,C,T) -> (B,C) at the last time index.
    LastTime(NodeId),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
    /// im2col matrix retained from the conv forward pass.
    saved: Option<Tensor>,
    label: Option<String>,
}

/// A recorded forward computation; `backward` propagates gradients to leaves.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> NodeId {
        self.nodes.push(Node { value, op, needs_grad, saved: None, label: None });
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.idx()].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.idx()].value.shape()
    }

    /// Trainable leaf; gradients are accumulated for it.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, true)
    }

    pub fn param_named(&mut self, value: Tensor, name: &str) -> NodeId {
        let id = self.param(value);
        self.nodes[id.idx()].label = Some(name.to_string());
        id
    }

    /// Non-trainable leaf (data); the backward pass skips it.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    fn unary(&mut self, x: NodeId, value: Tensor, op: Op) -> NodeId {
        let ng = self.nodes[x.idx()].needs_grad;
        self.push(value, op, ng)
    }

    fn binary(&mut self, a: NodeId, b: NodeId, value: Tensor, op: Op) -> NodeId {
        let ng = self.nodes[a.idx()].needs_grad || self.nodes[b.idx()].needs_grad;
        self.push(value, op, ng)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = matmul(self.value(a), self.value(b), false, false);
        self.binary(a, b, v, Op::MatMul(a, b))
    }

    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> NodeId {
        let (m, n) = (self.value(a).rows(), self.value(a).cols());
        assert_eq!(self.value(bias).len(), n, "bias length vs columns");
        let mut v = self.value(a).clone();
        {
            let bd = self.value(bias).data().to_vec();
            let vd = v.data_mut();
            for r in 0..m {
                for c in 0..n {
                    vd[r * n + c] += bd[c];
                }
            }
        }
        self.binary(a, bias, v, Op::AddBias(a, bias))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip(a, b, |x, y| x + y);
        self.binary(a, b, v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip(a, b, |x, y| x - y);
        self.binary(a, b, v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.zip(a, b, |x, y| x * y);
        self.binary(a, b, v, Op::Mul(a, b))
    }

    fn zip(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "elementwise shape mismatch");
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::from_vec(ta.shape(), data)
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> NodeId {
        let v = self.map(x, |a| a * s);
        self.unary(x, v, Op::Scale(x, s))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, sigmoid);
        self.unary(x, v, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, f64::tanh);
        self.unary(x, v, Op::Tanh(x))
    }

    pub fn silu(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, |a| a * sigmoid(a));
        self.unary(x, v, Op::Silu(x))
    }

    pub fn square(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, |a| a * a);
        self.unary(x, v, Op::Square(x))
    }

    fn map(&self, x: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(x);
        Tensor::from_vec(t.shape(), t.data().iter().map(|&a| f(a)).collect())
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s: f64 = self.value(x).data().iter().sum();
        self.unary(x, Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let n = self.value(x).len().max(1);
        let s: f64 = self.value(x).data().iter().sum();
        self.unary(x, Tensor::scalar(s / n as f64), Op::Mean(x))
    }

    /// Contiguous flat range of `x` viewed with `shape`.
    pub fn slice(&mut self, x: NodeId, offset: usize, shape: &[usize]) -> NodeId {
        let len: usize = shape.iter().product();
        let t = self.value(x);
        assert!(offset + len <= t.len(), "slice [{offset}, {}) out of {}", offset + len, t.len());
        let v = Tensor::from_vec(shape, t.data()[offset..offset + len].to_vec());
        self.unary(x, v, Op::Slice(x, offset))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, width: usize) -> NodeId {
        let (m, n) = (self.value(x).rows(), self.value(x).cols());
        assert!(start + width <= n, "column slice out of range");
        let mut data = Vec::with_capacity(m * width);
        {
            let xd = self.value(x).data();
            for r in 0..m {
                data.extend_from_slice(&xd[r * n + start..r * n + start + width]);
            }
        }
        let v = Tensor::from_vec(&[m, width], data);
        self.unary(x, v, Op::SliceCols(x, start, width))
    }

    /// sum_i coeffs[i] * rows[i] of a 2-D node, as a (1, cols) tensor.
    pub fn weighted_row_sum(&mut self, x: NodeId, coeffs: &[f64]) -> NodeId {
        let (m, n) = (self.value(x).rows(), self.value(x).cols());
        assert_eq!(m, coeffs.len(), "coefficient count vs rows");
        let mut out = vec![0.0; n];
        {
            let xd = self.value(x).data();
            for (i, &a) in coeffs.iter().enumerate() {
                for c in 0..n {
                    out[c] += a * xd[i * n + c];
                }
            }
        }
        let v = Tensor::from_vec(&[1, n], out);
        self.unary(x, v, Op::WeightedRowSum(x, coeffs.to_vec()))
    }

    /// Causal dilated 1-D convolution with left zero-padding dilation*(k-1).
    ///
    /// Kernel tap `j` multiplies the input `j*dilation` steps in the past, so
    /// tap 0 is the most recent sample and the output at time t depends only
    /// on inputs at times <= t.
    pub fn causal_conv(&mut self, input: NodeId, kernel: NodeId, bias: NodeId, dilation: usize) -> NodeId {
        let ishape = self.value(input).shape().to_vec();
        let kshape = self.value(kernel).shape().to_vec();
        assert_eq!(ishape.len(), 3, "conv input must be (batch, channels, time)");
        assert_eq!(kshape.len(), 3, "conv kernel must be (out, in, taps)");
        let (b, cin, t) = (ishape[0], ishape[1], ishape[2]);
        let (cout, kcin, k) = (kshape[0], kshape[1], kshape[2]);
        assert_eq!(cin, kcin, "conv channel mismatch");
        assert_eq!(self.value(bias).len(), cout, "conv bias length");
        assert!(dilation >= 1);

        let cols = im2col(self.value(input), k, dilation);
        // (B*T, Cin*K) x (Cin*K, Cout) via kernel^T
        let kmat = Tensor::from_vec(&[cout, cin * k], self.value(kernel).data().to_vec());
        let flat = matmul(&cols, &kmat, false, true);
        let mut out = Tensor::zeros(&[b, cout, t]);
        {
            let fd = flat.data();
            let bd = self.value(bias).data().to_vec();
            let od = out.data_mut();
            for bi in 0..b {
                for ti in 0..t {
                    let row = (bi * t + ti) * cout;
                    for co in 0..cout {
                        od[(bi * cout + co) * t + ti] = fd[row + co] + bd[co];
                    }
                }
            }
        }
        let ng = self.nodes[input.idx()].needs_grad
            || self.nodes[kernel.idx()].needs_grad
            || self.nodes[bias.idx()].needs_grad;
        let id = self.push(out, Op::CausalConv(input, kernel, bias, dilation), ng);
        self.nodes[id.idx()].saved = Some(cols);
        id
    }

    pub fn last_time(&mut self, x: NodeId) -> NodeId {
        let sh = self.value(x).shape().to_vec();
        assert_eq!(sh.len(), 3, "last_time expects (batch, channels, time)");
        let (b, c, t) = (sh[0], sh[1], sh[2]);
        let mut data = Vec::with_capacity(b * c);
        {
            let xd = self.value(x).data();
            for bi in 0..b {
                for ci in 0..c {
                    data.push(xd[(bi * c + ci) * t + t - 1]);
                }
            }
        }
        let v = Tensor::from_vec(&[b, c], data);
        self.unary(x, v, Op::LastTime(x))
    }

    /// First node holding a non-finite value, if any; used for diagnostics.
    pub fn first_non_finite(&self) -> Option<String> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.value.has_non_finite() {
                return Some(match &n.label {
                    Some(l) => l.clone(),
                    None => format!("{} (node {})", op_name(&n.op), i),
                });
            }
        }
        None
    }

    /// Reverse pass from a scalar node; returns per-node gradients (None for
    /// nodes the loss does not reach or that need no gradient).
    pub fn backward(&mut self, loss: NodeId) -> Vec<Option<Tensor>> {
        assert_eq!(self.value(loss).len(), 1, "backward requires a scalar loss");
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.idx()] = Some(Tensor::scalar(1.0));

        for i in (0..self.nodes.len()).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            if !self.nodes[i].needs_grad {
                continue;
            }
            self.backprop_one(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        grads
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        if !self.nodes[id.idx()].needs_grad {
            return;
        }
        match &mut grads[id.idx()] {
            Some(g) => {
                let gd = g.data_mut();
                for (a, b) in gd.iter_mut().zip(delta.data()) {
                    *a += b;
                }
            }
            slot => *slot = Some(delta),
        }
    }

    fn backprop_one(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.nodes[a.idx()].needs_grad {
                    let mut ga = grads[a.idx()]
                        .take()
                        .unwrap_or_else(|| Tensor::zeros(self.value(*a).shape()));
                    matmul_into(&mut ga, g, self.value(*b), false, true, 1.0, 1.0);
                    grads[a.idx()] = Some(ga);
                }
                if self.nodes[b.idx()].needs_grad {
                    let mut gb = grads[b.idx()]
                        .take()
                        .unwrap_or_else(|| Tensor::zeros(self.value(*b).shape()));
                    matmul_into(&mut gb, self.value(*a), g, true, false, 1.0, 1.0);
                    grads[b.idx()] = Some(gb);
                }
            }
            Op::AddBias(a, bias) => {
                self.accumulate(grads, *a, g.clone());
                if self.nodes[bias.idx()].needs_grad {
                    let (m, n) = (g.rows(), g.cols());
                    let mut col = vec![0.0; n];
                    for r in 0..m {
                        for c in 0..n {
                            col[c] += g.data()[r * n + c];
                        }
                    }
                    self.accumulate(grads, *bias, Tensor::from_vec(self.value(*bias).shape(), col));
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                let neg = Tensor::from_vec(g.shape(), g.data().iter().map(|v| -v).collect());
                self.accumulate(grads, *b, neg);
            }
            Op::Mul(a, b) => {
                let gb_data: Vec<f64> =
                    g.data().iter().zip(self.value(*a).data()).map(|(&x, &y)| x * y).collect();
                let ga_data: Vec<f64> =
                    g.data().iter().zip(self.value(*b).data()).map(|(&x, &y)| x * y).collect();
                self.accumulate(grads, *a, Tensor::from_vec(g.shape(), ga_data));
                self.accumulate(grads, *b, Tensor::from_vec(g.shape(), gb_data));
            }
            Op::Scale(x, s) => {
                let d = Tensor::from_vec(g.shape(), g.data().iter().map(|v| v * s).collect());
                self.accumulate(grads, *x, d);
            }
            Op::Sigmoid(x) => {
                let d = self.map2(i, g, |y, gi| gi * y * (1.0 - y));
                self.accumulate(grads, *x, d);
            }
            Op::Tanh(x) => {
                let d = self.map2(i, g, |y, gi| gi * (1.0 - y * y));
                self.accumulate(grads, *x, d);
            }
            Op::Silu(x) => {
                // d/dx [x*sigma(x)] = sigma(x) * (1 + x*(1 - sigma(x)))
                let xv = self.value(*x);
                let data: Vec<f64> = xv
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&a, &gi)| {
                        let s = sigmoid(a);
                        gi * s * (1.0 + a * (1.0 - s))
                    })
                    .collect();
                self.accumulate(grads, *x, Tensor::from_vec(xv.shape(), data));
            }
            Op::Square(x) => {
                let xv = self.value(*x);
                let data: Vec<f64> =
                    xv.data().iter().zip(g.data()).map(|(&a, &gi)| gi * 2.0 * a).collect();
                self.accumulate(grads, *x, Tensor::from_vec(xv.shape(), data));
            }
            Op::Sum(x) => {
                let gi = g.item();
                self.accumulate(grads, *x, Tensor::fill(self.value(*x).shape(), gi));
            }
            Op::Mean(x) => {
                let n = self.value(*x).len().max(1);
                let gi = g.item() / n as f64;
                self.accumulate(grads, *x, Tensor::fill(self.value(*x).shape(), gi));
            }
            Op::Slice(x, offset) => {
                let mut gx = Tensor::zeros(self.value(*x).shape());
                gx.data_mut()[*offset..offset + g.len()].copy_from_slice(g.data());
                self.accumulate(grads, *x, gx);
            }
            Op::SliceCols(x, start, width) => {
                let (m, n) = (self.value(*x).rows(), self.value(*x).cols());
                let mut gx = Tensor::zeros(&[m, n]);
                {
                    let gd = gx.data_mut();
                    for r in 0..m {
                        for c in 0..*width {
                            gd[r * n + start + c] = g.data()[r * width + c];
                        }
                    }
                }
                self.accumulate(grads, *x, gx);
            }
            Op::WeightedRowSum(x, coeffs) => {
                let n = self.value(*x).cols();
                let mut gx = Tensor::zeros(self.value(*x).shape());
                {
                    let gd = gx.data_mut();
                    for (i, &a) in coeffs.iter().enumerate() {
                        for c in 0..n {
                            gd[i * n + c] = a * g.data()[c];
                        }
                    }
                }
                self.accumulate(grads, *x, gx);
            }
            Op::CausalConv(input, kernel, bias, dilation) => {
                self.conv_backward(i, *input, *kernel, *bias, *dilation, g, grads);
            }
            Op::LastTime(x) => {
                let sh = self.value(*x).shape();
                let (b, c, t) = (sh[0], sh[1], sh[2]);
                let mut gx = Tensor::zeros(sh);
                {
                    let gd = gx.data_mut();
                    for bi in 0..b {
                        for ci in 0..c {
                            gd[(bi * c + ci) * t + t - 1] = g.data()[bi * c + ci];
                        }
                    }
                }
                self.accumulate(grads, *x, gx);
            }
        }
    }

    fn map2(&self, i: usize, g: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let y = &self.nodes[i].value;
        let data: Vec<f64> = y.data().iter().zip(g.data()).map(|(&a, &gi)| f(a, gi)).collect();
        Tensor::from_vec(y.shape(), data)
    }

    #[allow(clippy::too_many_arguments)]
    fn conv_backward(
        &self,
        node: usize,
        input: NodeId,
        kernel: NodeId,
        bias: NodeId,
        dilation: usize,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
    ) {
        let ish = self.value(input).shape();
        let ksh = self.value(kernel).shape();
        let (b, cin, t) = (ish[0], ish[1], ish[2]);
        let (cout, k) = (ksh[0], ksh[2]);
        // (B,Cout,T) grad -> (B*T, Cout) layout matching the forward matmul
        let mut gflat = Tensor::zeros(&[b * t, cout]);
        {
            let gd = g.data();
            let fd = gflat.data_mut();
            for bi in 0..b {
                for co in 0..cout {
                    for ti in 0..t {
                        fd[(bi * t + ti) * cout + co] = gd[(bi * cout + co) * t + ti];
                    }
                }
            }
        }
        if self.nodes[bias.idx()].needs_grad {
            let mut gb = vec![0.0; cout];
            for row in 0..b * t {
                for co in 0..cout {
                    gb[co] += gflat.data()[row * cout + co];
                }
            }
            self.accumulate(grads, bias, Tensor::from_vec(self.value(bias).shape(), gb));
        }
        let cols = self.nodes[node].saved.as_ref().expect("conv saved im2col");
        if self.nodes[kernel.idx()].needs_grad {
            // (Cout, B*T) x (B*T, Cin*K)
            let gk = matmul(&gflat, cols, true, false);
            self.accumulate(grads, kernel, Tensor::from_vec(ksh, gk.into_data()));
        }
        if self.nodes[input.idx()].needs_grad {
            let kmat = Tensor::from_vec(&[cout, cin * k], self.value(kernel).data().to_vec());
            // (B*T, Cout) x (Cout, Cin*K)
            let gcols = matmul(&gflat, &kmat, false, false);
            let mut gx = Tensor::zeros(ish);
            col2im_accumulate(&gcols, &mut gx, k, dilation);
            self.accumulate(grads, input, gx);
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// (B,Cin,T) -> (B*T, Cin*K); column (ci*K + j) holds the sample j*dilation
/// steps in the past, zero before the start of the window.
fn im2col(input: &Tensor, k: usize, dilation: usize) -> Tensor {
    let sh = input.shape();
    let (b, cin, t) = (sh[0], sh[1], sh[2]);
    let mut cols = Tensor::zeros(&[b * t, cin * k]);
    {
        let xd = input.data();
        let cd = cols.data_mut();
        for bi in 0..b {
            for ti in 0..t {
                let row = (bi * t + ti) * cin * k;
                for ci in 0..cin {
                    let base = (bi * cin + ci) * t;
                    for j in 0..k {
                        let tap = j * dilation;
                        if tap <= ti {
                            cd[row + ci * k + j] = xd[base + ti - tap];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im_accumulate(gcols: &Tensor, gx: &mut Tensor, k: usize, dilation: usize) {
    let sh = gx.shape().to_vec();
    let (b, cin, t) = (sh[0], sh[1], sh[2]);
    let gd = gcols.data();
    let xd = gx.data_mut();
    for bi in 0..b {
        for ti in 0..t {
            let row = (bi * t + ti) * cin * k;
            for ci in 0..cin {
                let base = (bi * cin + ci) * t;
                for j in 0..k {
                    let tap = j * dilation;
                    if tap <= ti {
                        xd[base + ti - tap] += gd[row + ci * k + j];
                    }
                }
            }
        }
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::MatMul(..) => "matmul",
        Op::AddBias(..) => "add_bias",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::Mul(..) => "mul",
        Op::Scale(..) => "scale",
        Op::Sigmoid(..) => "sigmoid",
        Op::Tanh(..) => "tanh",
        Op::Silu(..) => "silu",
        Op::Square(..) => "square",
        Op::Sum(..) => "sum",
        Op::Mean(..) => "mean",
        Op::Slice(..) => "slice",
        Op::SliceCols(..) => "slice_cols",
        Op::WeightedRowSum(..) => "weighted_row_sum",
        Op::CausalConv(..) => "causal_conv",
        Op::LastTime(..) => "last_time",
    }
}
