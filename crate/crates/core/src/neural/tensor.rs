use crate::error::{Error, Result};

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dimension(format!("tensor of shape {shape:?}"), n, data.len()));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    /// Stacks equal-length rows into a `[rows, width]` tensor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * width);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::dimension(format!("row {i}"), width, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Tensor { shape: vec![rows.len(), width], data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.shape[1];
        &self.data[i * w..(i + 1) * w]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }
}

/// Dot product with four independent accumulators; the summation order is
/// fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out = bias + W x` for a row-major `[out, in]` matrix.
#[inline]
pub fn affine(w: &[f64], bias: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (row, b)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(bias)) {
        *o = b + dot(row, x);
    }
}

/// `out += W x`.
#[inline]
pub fn matvec_add(w: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(n_in)) {
        *o += dot(row, x);
    }
}

/// Accumulates the gradients of `y = W x (+ b)` given `dy`:
/// `dW += dy xᵀ`, and `dx += Wᵀ dy` when `dx` is given.
#[inline]
pub fn affine_backward(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], dx: Option<&mut [f64]>) {
    let n_in = x.len();
    for (&g, dw_row) in dy.iter().zip(dw.chunks_exact_mut(n_in)) {
        if g != 0.0 {
            axpy(g, x, dw_row);
        }
    }
    if let Some(dx) = dx {
        for (&g, row) in dy.iter().zip(w.chunks_exact(n_in)) {
            if g != 0.0 {
                axpy(g, row, dx);
            }
        }
    }
}
