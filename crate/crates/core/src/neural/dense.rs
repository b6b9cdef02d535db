//! Stack of fully connected layers; the last one is linear.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::Activation;
use super::tensor::{affine, affine_backward, Tensor};

#[derive(Debug, Clone)]
pub(crate) struct DenseCache {
    /// `inputs[l]` is what layer `l` consumed (after dropout).
    pub inputs: Vec<Vec<f64>>,
    /// Activation outputs of hidden layers, before dropout.
    activated: Vec<Vec<f64>>,
    /// Dropout scale per hidden unit; empty when dropout is off.
    masks: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl DenseCache {
    /// `widths` = input width, hidden sizes..., output width.
    pub fn new(widths: &[usize]) -> Self {
        let n = widths.len() - 1;
        let max = widths.iter().copied().max().unwrap_or(0);
        DenseCache {
            inputs: widths[..n].iter().map(|&w| vec![0.0; w]).collect(),
            activated: widths[1..n].iter().map(|&w| vec![0.0; w]).collect(),
            masks: vec![Vec::new(); n.saturating_sub(1)],
            logits: vec![0.0; widths[n]],
            delta: Vec::with_capacity(max),
            next_delta: Vec::with_capacity(max),
        }
    }

    pub fn input_mut(&mut self) -> &mut [f64] {
        &mut self.inputs[0]
    }
}

/// Runs the stack on `cache.inputs[0]`. `params` holds `w0, b0, w1, b1, ...`.
pub(crate) fn forward(
    params: &[Tensor],
    act: Activation,
    cache: &mut DenseCache,
    mut dropout: Option<(f64, &mut ChaCha8Rng)>,
) {
    let layers = params.len() / 2;
    for l in 0..layers {
        let (w, b) = (&params[2 * l].data, &params[2 * l + 1].data);
        if l + 1 == layers {
            affine(w, b, &cache.inputs[l], &mut cache.logits);
            break;
        }
        let (head, tail) = cache.inputs.split_at_mut(l + 1);
        let out = &mut cache.activated[l];
        affine(w, b, &head[l], out);
        for v in out.iter_mut() {
            *v = act.apply(*v);
        }
        let next = &mut tail[0];
        match dropout.as_mut() {
            Some((p, rng)) if *p > 0.0 => {
                let keep = 1.0 / (1.0 - *p);
                let mask = &mut cache.masks[l];
                mask.clear();
                mask.extend((0..out.len()).map(|_| if rng.gen::<f64>() < *p { 0.0 } else { keep }));
                for ((n, o), m) in next.iter_mut().zip(out.iter()).zip(mask.iter()) {
                    *n = o * m;
                }
            }
            _ => {
                cache.masks[l].clear();
                next.copy_from_slice(out);
            }
        }
    }
}

/// Accumulates parameter gradients for `dlogits` and, if asked, the
/// gradient with respect to the stack input.
pub(crate) fn backward(
    params: &[Tensor],
    grads: &mut [Tensor],
    act: Activation,
    cache: &mut DenseCache,
    dlogits: &[f64],
    dinput: Option<&mut [f64]>,
) {
    let layers = params.len() / 2;
    let mut delta = std::mem::take(&mut cache.delta);
    let mut next = std::mem::take(&mut cache.next_delta);
    delta.clear();
    delta.extend_from_slice(dlogits);
    let mut dinput = dinput;
    for l in (0..layers).rev() {
        let x = &cache.inputs[l];
        let (gw, gb) = grads[2 * l..2 * l + 2].split_at_mut(1);
        for (g, d) in gb[0].data.iter_mut().zip(&delta) {
            *g += d;
        }
        if l == 0 {
            affine_backward(&params[0].data, x, &delta, &mut gw[0].data, dinput.as_deref_mut());
            break;
        }
        next.clear();
        next.resize(x.len(), 0.0);
        affine_backward(&params[2 * l].data, x, &delta, &mut gw[0].data, Some(&mut next));
        let y = &cache.activated[l - 1];
        let mask = &cache.masks[l - 1];
        for (j, d) in next.iter_mut().enumerate() {
            *d *= act.derivative_from_output(y[j]);
            if !mask.is_empty() {
                *d *= mask[j];
            }
        }
        std::mem::swap(&mut delta, &mut next);
    }
    cache.delta = delta;
    cache.next_delta = next;
}
