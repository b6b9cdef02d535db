//! 2-D convolutions over the reshaped feature grid.

use super::config::Activation;
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvShape {
    pub c_in: usize,
    pub h_in: usize,
    pub w_in: usize,
    pub c_out: usize,
    pub h_out: usize,
    pub w_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct ConvCache {
    pub shape: ConvShape,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub dinput: Vec<f64>,
    dpre: Vec<f64>,
}

impl ConvCache {
    pub fn new(shape: ConvShape) -> Self {
        let n_in = shape.c_in * shape.h_in * shape.w_in;
        let n_out = shape.c_out * shape.h_out * shape.w_out;
        ConvCache { shape, input: vec![0.0; n_in], output: vec![0.0; n_out], dinput: vec![0.0; n_in], dpre: vec![0.0; n_out] }
    }
}

impl ConvShape {
    /// Input offset read by output `(i, j)` through kernel tap `(ki, kj)`, if inside.
    #[inline]
    fn tap(&self, i: usize, j: usize, ki: usize, kj: usize) -> Option<(usize, usize)> {
        let y = (i * self.stride + ki).checked_sub(self.padding)?;
        let x = (j * self.stride + kj).checked_sub(self.padding)?;
        (y < self.h_in && x < self.w_in).then_some((y, x))
    }
}

pub(crate) fn forward(w: &Tensor, b: &Tensor, act: Activation, cache: &mut ConvCache) {
    let s = cache.shape;
    let k = s.kernel;
    for co in 0..s.c_out {
        for i in 0..s.h_out {
            for j in 0..s.w_out {
                let mut acc = b.data[co];
                for ci in 0..s.c_in {
                    let wbase = (co * s.c_in + ci) * k * k;
                    let ibase = ci * s.h_in * s.w_in;
                    for ki in 0..k {
                        for kj in 0..k {
                            if let Some((y, x)) = s.tap(i, j, ki, kj) {
                                acc += w.data[wbase + ki * k + kj] * cache.input[ibase + y * s.w_in + x];
                            }
                        }
                    }
                }
                cache.output[(co * s.h_out + i) * s.w_out + j] = act.apply(acc);
            }
        }
    }
}

/// `dout` is the gradient w.r.t. the activated output. Fills `cache.dinput`
/// when `want_dx`.
pub(crate) fn backward(
    w: &Tensor,
    gw: &mut Tensor,
    gb: &mut Tensor,
    act: Activation,
    cache: &mut ConvCache,
    dout: &[f64],
    want_dx: bool,
) {
    let s = cache.shape;
    let k = s.kernel;
    for (d, (g, y)) in cache.dpre.iter_mut().zip(dout.iter().zip(&cache.output)) {
        *d = g * act.derivative_from_output(*y);
    }
    cache.dinput.fill(0.0);
    for co in 0..s.c_out {
        for i in 0..s.h_out {
            for j in 0..s.w_out {
                let d = cache.dpre[(co * s.h_out + i) * s.w_out + j];
                if d == 0.0 {
                    continue;
                }
                gb.data[co] += d;
                for ci in 0..s.c_in {
                    let wbase = (co * s.c_in + ci) * k * k;
                    let ibase = ci * s.h_in * s.w_in;
                    for ki in 0..k {
                        for kj in 0..k {
                            if let Some((y, x)) = s.tap(i, j, ki, kj) {
                                let at = ibase + y * s.w_in + x;
                                gw.data[wbase + ki * k + kj] += d * cache.input[at];
                                if want_dx {
                                    cache.dinput[at] += d * w.data[wbase + ki * k + kj];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
