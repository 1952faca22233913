//! Dense row-major f64 tensors. Only what the tape ops need.

use matrixmultiply::dgemm;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(n, data.len(), "shape {:?} does not match data length {}", shape, data.len());
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: vec![], data: vec![v] }
    }

    pub fn fill(shape: &[usize], v: f64) -> Self {
        let n: usize = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![v; n] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Value of a scalar (shape []) or single-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.data.len(), 1, "item() on tensor with {} elements", self.data.len());
        self.data[0]
    }

    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2);
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2);
        self.shape[1]
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }
}

/// C = alpha * op(A) * op(B) + beta * C for row-major 2-D tensors.
pub fn matmul_into(
    c: &mut Tensor,
    a: &Tensor,
    b: &Tensor,
    trans_a: bool,
    trans_b: bool,
    alpha: f64,
    beta: f64,
) {
    let (am, ak) = (a.rows(), a.cols());
    let (bk, bn) = (b.rows(), b.cols());
    let (m, k) = if trans_a { (ak, am) } else { (am, ak) };
    let (k2, n) = if trans_b { (bn, bk) } else { (bk, bn) };
    assert_eq!(k, k2, "matmul inner dims {k} vs {k2}");
    assert_eq!(c.shape(), &[m, n], "matmul output shape");
    // row-major strides; transposition = swapped strides
    let (rsa, csa): (isize, isize) = if trans_a { (1, ak as isize) } else { (ak as isize, 1) };
    let (rsb, csb): (isize, isize) = if trans_b { (1, bn as isize) } else { (bn as isize, 1) };
    unsafe {
        dgemm(
            m, k, n, alpha,
            a.data().as_ptr(), rsa, csa,
            b.data().as_ptr(), rsb, csb,
            beta,
            c.data_mut().as_mut_ptr(), n as isize, 1,
        );
    }
}

/// Fresh C = op(A) * op(B).
pub fn matmul(a: &Tensor, b: &Tensor, trans_a: bool, trans_b: bool) -> Tensor {
    let m = if trans_a { a.cols() } else { a.rows() };
    let n = if trans_b { b.rows() } else { b.cols() };
    let mut c = Tensor::zeros(&[m, n]);
    matmul_into(&mut c, a, b, trans_a, trans_b, 1.0, 0.0);
    c
}
