//! Stacked RNN, GRU and LSTM layers unrolled over a short sequence.
//!
//! Gate order follows the common convention: GRU `r, z, n`, LSTM `i, f, g, o`,
//! with separate input and hidden biases. The initial state is zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{Activation, Architecture};
use super::tensor::{affine, affine_backward, axpy, matvec_add, Tensor};

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone)]
struct Step {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-nonlinearity gate values, concatenated.
    gates: Vec<f64>,
    /// GRU: `W_hn h + b_hn`.
    hn: Vec<f64>,
    tanh_c: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// Inputs per step (after inter-layer dropout).
    pub xs: Vec<Vec<f64>>,
    steps: Vec<Step>,
    mask: Vec<f64>,
    /// Per-step gradient w.r.t. this layer's outputs.
    dout: Vec<Vec<f64>>,
    /// Per-step gradient w.r.t. this layer's inputs.
    dxs: Vec<Vec<f64>>,
    da_ih: Vec<f64>,
    da_hh: Vec<f64>,
    dh: Vec<f64>,
    dc: Vec<f64>,
    dh_carry: Vec<f64>,
    dc_carry: Vec<f64>,
}

impl LayerCache {
    pub fn new(arch: Architecture, n_in: usize, hidden: usize, steps: usize) -> Self {
        let g = super::params::gate_count(arch) * hidden;
        let step = Step {
            h_prev: vec![0.0; hidden],
            c_prev: vec![0.0; hidden],
            gates: vec![0.0; g],
            hn: vec![0.0; hidden],
            tanh_c: vec![0.0; hidden],
            c: vec![0.0; hidden],
            h: vec![0.0; hidden],
        };
        LayerCache {
            xs: vec![vec![0.0; n_in]; steps],
            steps: vec![step; steps],
            mask: Vec::new(),
            dout: vec![vec![0.0; hidden]; steps],
            dxs: vec![vec![0.0; n_in]; steps],
            da_ih: vec![0.0; g],
            da_hh: vec![0.0; g],
            dh: vec![0.0; hidden],
            dc: vec![0.0; hidden],
            dh_carry: vec![0.0; hidden],
            dc_carry: vec![0.0; hidden],
        }
    }

    pub fn last_hidden(&self) -> &[f64] {
        &self.steps.last().expect("at least one step").h
    }
}

/// `[w_ih, w_hh, b_ih, b_hh]` of one layer.
type LayerParams<'a> = &'a [Tensor];

fn layer_forward(arch: Architecture, act: Activation, p: LayerParams, cache: &mut LayerCache) {
    let mut gi = vec![0.0; p[2].len()];
    let mut gh = vec![0.0; p[3].len()];
    for t in 0..cache.xs.len() {
        let (before, rest) = cache.steps.split_at_mut(t);
        let step = &mut rest[0];
        match before.last() {
            Some(prev) => {
                step.h_prev.copy_from_slice(&prev.h);
                step.c_prev.copy_from_slice(&prev.c);
            }
            None => {
                step.h_prev.fill(0.0);
                step.c_prev.fill(0.0);
            }
        }
        // The initial state is zero, so W_hh contributes nothing at t = 0.
        step_forward(arch, act, p, &cache.xs[t], step, t > 0, &mut gi, &mut gh);
    }
}

/// One cell update from `step.h_prev` / `step.c_prev`.
#[allow(clippy::too_many_arguments)]
fn step_forward(
    arch: Architecture,
    act: Activation,
    p: LayerParams,
    x: &[f64],
    step: &mut Step,
    use_hh: bool,
    gi: &mut [f64],
    gh: &mut [f64],
) {
    let (w_ih, w_hh, b_ih, b_hh) = (&p[0].data, &p[1].data, &p[2].data, &p[3].data);
    let h = step.h.len();
    affine(w_ih, b_ih, x, gi);
    gh.copy_from_slice(b_hh);
    if use_hh {
        matvec_add(w_hh, &step.h_prev, gh);
    }
    match arch {
        Architecture::Gru => {
            for j in 0..h {
                let r = sigmoid(gi[j] + gh[j]);
                let z = sigmoid(gi[h + j] + gh[h + j]);
                let n = (gi[2 * h + j] + r * gh[2 * h + j]).tanh();
                step.gates[j] = r;
                step.gates[h + j] = z;
                step.gates[2 * h + j] = n;
                step.hn[j] = gh[2 * h + j];
                step.h[j] = (1.0 - z) * n + z * step.h_prev[j];
            }
        }
        Architecture::Lstm => {
            for j in 0..h {
                let i = sigmoid(gi[j] + gh[j]);
                let f = sigmoid(gi[h + j] + gh[h + j]);
                let g = (gi[2 * h + j] + gh[2 * h + j]).tanh();
                let o = sigmoid(gi[3 * h + j] + gh[3 * h + j]);
                step.gates[j] = i;
                step.gates[h + j] = f;
                step.gates[2 * h + j] = g;
                step.gates[3 * h + j] = o;
                step.c[j] = f * step.c_prev[j] + i * g;
                step.tanh_c[j] = step.c[j].tanh();
                step.h[j] = o * step.tanh_c[j];
            }
        }
        _ => {
            for j in 0..h {
                step.h[j] = act.apply(gi[j] + gh[j]);
                step.gates[j] = step.h[j];
            }
        }
    }
}

#[cfg(test)]
/// Single cell evaluation from an arbitrary prior state; returns `(h, c)`.
pub(crate) fn cell(arch: Architecture, act: Activation, p: &[Tensor], x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut cache = LayerCache::new(arch, x.len(), h_prev.len(), 1);
    let step = &mut cache.steps[0];
    step.h_prev.copy_from_slice(h_prev);
    step.c_prev.copy_from_slice(c_prev);
    let mut gi = vec![0.0; p[2].len()];
    let mut gh = vec![0.0; p[3].len()];
    step_forward(arch, act, p, x, step, true, &mut gi, &mut gh);
    (step.h.clone(), step.c.clone())
}

/// Backpropagates `cache.dout` through time; fills `cache.dxs` when `want_dx`.
fn layer_backward(arch: Architecture, act: Activation, p: LayerParams, g: &mut [Tensor], cache: &mut LayerCache, want_dx: bool) {
    let (w_ih, w_hh) = (&p[0].data, &p[1].data);
    let h = cache.dh.len();
    let (g_wih, rest) = g.split_at_mut(1);
    let (g_whh, rest) = rest.split_at_mut(1);
    let (g_bih, g_bhh) = rest.split_at_mut(1);
    cache.dh_carry.fill(0.0);
    cache.dc_carry.fill(0.0);
    for t in (0..cache.xs.len()).rev() {
        let step = &cache.steps[t];
        for j in 0..h {
            cache.dh[j] = cache.dout[t][j] + cache.dh_carry[j];
        }
        let (dh, da_ih, da_hh) = (&cache.dh, &mut cache.da_ih, &mut cache.da_hh);
        // Gradient flowing straight into h_prev, not through W_hh.
        let mut direct = vec![0.0; if t > 0 && arch == Architecture::Gru { h } else { 0 }];
        match arch {
            Architecture::Gru => {
                for j in 0..h {
                    let (r, z, n) = (step.gates[j], step.gates[h + j], step.gates[2 * h + j]);
                    let dn = dh[j] * (1.0 - z);
                    let dz = dh[j] * (step.h_prev[j] - n);
                    let da_n = dn * (1.0 - n * n);
                    let dr = da_n * step.hn[j];
                    let da_r = dr * r * (1.0 - r);
                    let da_z = dz * z * (1.0 - z);
                    da_ih[j] = da_r;
                    da_ih[h + j] = da_z;
                    da_ih[2 * h + j] = da_n;
                    da_hh[j] = da_r;
                    da_hh[h + j] = da_z;
                    da_hh[2 * h + j] = da_n * r;
                    if t > 0 {
                        direct[j] = dh[j] * z;
                    }
                }
            }
            Architecture::Lstm => {
                for j in 0..h {
                    let (i, f, gg, o) = (step.gates[j], step.gates[h + j], step.gates[2 * h + j], step.gates[3 * h + j]);
                    let tc = step.tanh_c[j];
                    let dc = cache.dc_carry[j] + dh[j] * o * (1.0 - tc * tc);
                    cache.dc[j] = dc;
                    da_ih[j] = dc * gg * i * (1.0 - i);
                    da_ih[h + j] = dc * step.c_prev[j] * f * (1.0 - f);
                    da_ih[2 * h + j] = dc * i * (1.0 - gg * gg);
                    da_ih[3 * h + j] = dh[j] * tc * o * (1.0 - o);
                }
                da_hh.copy_from_slice(da_ih);
            }
            _ => {
                for j in 0..h {
                    da_ih[j] = dh[j] * act.derivative_from_output(step.h[j]);
                }
                da_hh.copy_from_slice(da_ih);
            }
        }
        for (gb, d) in g_bih[0].data.iter_mut().zip(da_ih.iter()) {
            *gb += d;
        }
        for (gb, d) in g_bhh[0].data.iter_mut().zip(da_hh.iter()) {
            *gb += d;
        }
        let dx = if want_dx {
            cache.dxs[t].fill(0.0);
            Some(&mut cache.dxs[t][..])
        } else {
            None
        };
        affine_backward(w_ih, &cache.xs[t], da_ih, &mut g_wih[0].data, dx);
        if t > 0 {
            cache.dh_carry.fill(0.0);
            affine_backward(w_hh, &step.h_prev, da_hh, &mut g_whh[0].data, Some(&mut cache.dh_carry));
            if !direct.is_empty() {
                axpy(1.0, &direct, &mut cache.dh_carry);
            }
            if arch == Architecture::Lstm {
                for j in 0..h {
                    cache.dc_carry[j] = cache.dc[j] * step.gates[h + j];
                }
            }
        }
    }
}

/// Forward through all layers; `layers[0].xs` must hold the input sequence.
pub(crate) fn forward(
    arch: Architecture,
    act: Activation,
    params: &[Tensor],
    layers: &mut [LayerCache],
    mut dropout: Option<(f64, &mut ChaCha8Rng)>,
) {
    let n = layers.len();
    for k in 0..n {
        layer_forward(arch, act, &params[4 * k..4 * k + 4], &mut layers[k]);
        if k + 1 == n {
            break;
        }
        let (lo, hi) = layers.split_at_mut(k + 1);
        let (src, dst) = (&mut lo[k], &mut hi[0]);
        src.mask.clear();
        if let Some((p, rng)) = dropout.as_mut().filter(|(p, _)| *p > 0.0) {
            let keep = 1.0 / (1.0 - *p);
            let width = src.dh.len() * src.steps.len();
            src.mask.extend((0..width).map(|_| if rng.gen::<f64>() < *p { 0.0 } else { keep }));
        }
        let hidden = src.dh.len();
        for (t, x) in dst.xs.iter_mut().enumerate() {
            x.copy_from_slice(&src.steps[t].h);
            if !src.mask.is_empty() {
                for (j, v) in x.iter_mut().enumerate() {
                    *v *= src.mask[t * hidden + j];
                }
            }
        }
    }
}

/// Backward from `dlast`, the gradient w.r.t. the top layer's final hidden state.
pub(crate) fn backward(
    arch: Architecture,
    act: Activation,
    params: &[Tensor],
    grads: &mut [Tensor],
    layers: &mut [LayerCache],
    dlast: &[f64],
) {
    let n = layers.len();
    let top = &mut layers[n - 1];
    for d in top.dout.iter_mut() {
        d.fill(0.0);
    }
    let last = top.dout.len() - 1;
    top.dout[last].copy_from_slice(dlast);
    for k in (0..n).rev() {
        layer_backward(arch, act, &params[4 * k..4 * k + 4], &mut grads[4 * k..4 * k + 4], &mut layers[k], k > 0);
        if k == 0 {
            break;
        }
        let (lo, hi) = layers.split_at_mut(k);
        let (below, here) = (&mut lo[k - 1], &hi[0]);
        let hidden = below.dh.len();
        for (t, d) in below.dout.iter_mut().enumerate() {
            d.copy_from_slice(&here.dxs[t]);
            if !below.mask.is_empty() {
                for (j, v) in d.iter_mut().enumerate() {
                    *v *= below.mask[t * hidden + j];
                }
            }
        }
    }
}
