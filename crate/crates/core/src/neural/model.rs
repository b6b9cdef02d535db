use rand_chacha::ChaCha8Rng;

use super::cnn::{self, ConvCache, ConvShape};
use super::config::{Architecture, ModelConfig};
use super::dense::{self, DenseCache};
use super::loss::{sample_loss, softmax};
use super::optim::optimizer_step_masked;
use super::params::ModelParams;
use super::recurrent::{self, LayerCache};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// A configured classifier and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

/// Per-sample scratch space, reused across calls.
#[derive(Debug, Clone)]
pub struct Workspace {
    dense: DenseCache,
    rec: Vec<LayerCache>,
    conv: Vec<ConvCache>,
    dlogits: Vec<f64>,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let params = ModelParams::init(&config)?;
        Ok(Model { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: ModelParams) -> Result<Self> {
        params.check_against(&config)?;
        Ok(Model { config, params })
    }

    pub fn workspace(&self) -> Workspace {
        let c = &self.config;
        let mut rec = Vec::new();
        let mut conv = Vec::new();
        let dense_in = match c.architecture {
            Architecture::Mlp => c.input_size,
            Architecture::Rnn | Architecture::Gru | Architecture::Lstm => {
                for k in 0..c.recurrent_layers {
                    let n_in = if k == 0 { c.input_size } else { c.recurrent_hidden };
                    rec.push(LayerCache::new(c.architecture, n_in, c.recurrent_hidden, c.sequence_length));
                }
                c.recurrent_hidden
            }
            Architecture::Cnn => {
                let [mut ch, mut h, mut w] = c.grid;
                for &co in &c.conv_channels {
                    // Validated configs always have a positive output size.
                    let (ho, wo) = (c.conv_out(h).unwrap_or(1), c.conv_out(w).unwrap_or(1));
                    conv.push(ConvCache::new(ConvShape {
                        c_in: ch,
                        h_in: h,
                        w_in: w,
                        c_out: co,
                        h_out: ho,
                        w_out: wo,
                        kernel: c.kernel,
                        stride: c.stride,
                        padding: c.padding,
                    }));
                    (ch, h, w) = (co, ho, wo);
                }
                ch * h * w
            }
        };
        let hidden: &[usize] = if c.architecture.is_recurrent() { &[] } else { &c.hidden_sizes };
        let mut widths = vec![dense_in];
        widths.extend_from_slice(hidden);
        widths.push(c.output_classes);
        Workspace { dense: DenseCache::new(&widths), rec, conv, dlogits: vec![0.0; c.output_classes] }
    }

    /// Tensors whose gradient is identically zero: with single-row
    /// sequences the zero initial state never reaches `weight_hh`.
    fn inert(&self) -> Vec<bool> {
        self.params
            .names
            .iter()
            .map(|n| self.config.sequence_length == 1 && n.ends_with(".weight_hh"))
            .collect()
    }

    /// Index of the first dense-stack tensor.
    fn dense_offset(&self) -> usize {
        match self.config.architecture {
            Architecture::Mlp => 0,
            Architecture::Cnn => 2 * self.config.conv_channels.len(),
            _ => 4 * self.config.recurrent_layers,
        }
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        let want = self.config.sample_width();
        if x.len() != want {
            return Err(Error::dimension("model input", want, x.len()));
        }
        Ok(())
    }

    fn run(&self, x: &[f64], ws: &mut Workspace, rng: Option<&mut ChaCha8Rng>) {
        let c = &self.config;
        let p = &self.params.tensors;
        let dropout = rng.map(|r| (c.dropout, r));
        let off = self.dense_offset();
        match c.architecture {
            Architecture::Mlp => {
                ws.dense.input_mut().copy_from_slice(x);
                dense::forward(p, c.activation, &mut ws.dense, dropout);
            }
            Architecture::Rnn | Architecture::Gru | Architecture::Lstm => {
                for (t, step) in ws.rec[0].xs.iter_mut().enumerate() {
                    step.copy_from_slice(&x[t * c.input_size..(t + 1) * c.input_size]);
                }
                recurrent::forward(c.architecture, c.activation, &p[..off], &mut ws.rec, dropout);
                let top = ws.rec.last().expect("validated: at least one layer");
                ws.dense.input_mut().copy_from_slice(top.last_hidden());
                dense::forward(&p[off..], c.activation, &mut ws.dense, None);
            }
            Architecture::Cnn => {
                ws.conv[0].input.copy_from_slice(x);
                for l in 0..ws.conv.len() {
                    cnn::forward(&p[2 * l], &p[2 * l + 1], c.activation, &mut ws.conv[l]);
                    if l + 1 < ws.conv.len() {
                        let (lo, hi) = ws.conv.split_at_mut(l + 1);
                        hi[0].input.copy_from_slice(&lo[l].output);
                    }
                }
                let last = ws.conv.last().expect("validated: at least one conv layer");
                ws.dense.input_mut().copy_from_slice(&last.output);
                dense::forward(&p[off..], c.activation, &mut ws.dense, dropout);
            }
        }
    }

    fn back(&self, ws: &mut Workspace, grads: &mut [Tensor]) {
        let c = &self.config;
        let p = &self.params.tensors;
        let off = self.dense_offset();
        let (g_front, g_dense) = grads.split_at_mut(off);
        match c.architecture {
            Architecture::Mlp => {
                dense::backward(p, g_dense, c.activation, &mut ws.dense, &ws.dlogits, None);
            }
            Architecture::Rnn | Architecture::Gru | Architecture::Lstm => {
                let mut dlast = vec![0.0; c.recurrent_hidden];
                dense::backward(&p[off..], g_dense, c.activation, &mut ws.dense, &ws.dlogits, Some(&mut dlast));
                recurrent::backward(c.architecture, c.activation, &p[..off], g_front, &mut ws.rec, &dlast);
            }
            Architecture::Cnn => {
                let n = ws.conv.len();
                let mut dflat = vec![0.0; ws.conv[n - 1].output.len()];
                dense::backward(&p[off..], g_dense, c.activation, &mut ws.dense, &ws.dlogits, Some(&mut dflat));
                let mut dout = dflat;
                for l in (0..n).rev() {
                    let (gw, gb) = g_front[2 * l..2 * l + 2].split_at_mut(1);
                    cnn::backward(&p[2 * l], &mut gw[0], &mut gb[0], c.activation, &mut ws.conv[l], &dout, l > 0);
                    if l > 0 {
                        dout = ws.conv[l].dinput.clone();
                    }
                }
            }
        }
    }

    /// Logits of one flattened sample.
    pub fn logits<'w>(&self, x: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64]> {
        self.check_width(x)?;
        self.run(x, ws, None);
        if ws.dense.logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite logits".into()));
        }
        Ok(&ws.dense.logits)
    }

    /// Class probabilities of one sample.
    pub fn predict_proba_one(&self, x: &[f64], ws: &mut Workspace) -> Result<Vec<f64>> {
        Ok(softmax(self.logits(x, ws)?))
    }

    /// Softmax probabilities, `[batch, classes]`.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        if batch.shape.len() != 2 {
            return Err(Error::dimension("batch rank", 2, batch.shape.len()));
        }
        let mut ws = self.workspace();
        let mut data = Vec::with_capacity(batch.rows() * self.config.output_classes);
        for i in 0..batch.rows() {
            data.extend(self.predict_proba_one(batch.row(i), &mut ws)?);
        }
        Tensor::from_vec(&[batch.rows(), self.config.output_classes], data)
    }

    /// Mean loss of a batch without gradients.
    pub fn loss(&self, batch: &Tensor, labels: &[usize]) -> Result<f64> {
        if batch.rows() != labels.len() {
            return Err(Error::dimension("labels", batch.rows(), labels.len()));
        }
        let mut ws = self.workspace();
        let mut scratch = vec![0.0; self.config.output_classes];
        let mut total = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let z = self.logits(batch.row(i), &mut ws)?;
            total += sample_loss(self.config.loss, z, y, &mut scratch)?;
        }
        Ok(total / labels.len().max(1) as f64)
    }

    /// Mean loss over `rows` and its gradient (averaged) written into `grads`.
    ///
    /// `dropout_rng` enables training-mode dropout.
    pub fn gradients(
        &self,
        rows: &[&[f64]],
        labels: &[usize],
        grads: &mut [Tensor],
        ws: &mut Workspace,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<f64> {
        if rows.len() != labels.len() {
            return Err(Error::dimension("labels", rows.len(), labels.len()));
        }
        let inert = self.inert();
        for (g, &skip) in grads.iter_mut().zip(&inert) {
            if !skip {
                g.fill(0.0);
            }
        }
        let mut total = 0.0;
        for (x, &y) in rows.iter().zip(labels) {
            self.check_width(x)?;
            self.run(x, ws, dropout_rng.as_deref_mut());
            let mut dl = std::mem::take(&mut ws.dlogits);
            total += sample_loss(self.config.loss, &ws.dense.logits, y, &mut dl)?;
            ws.dlogits = dl;
            self.back(ws, grads);
        }
        let n = rows.len().max(1) as f64;
        if rows.len() > 1 {
            for (g, _) in grads.iter_mut().zip(&inert).filter(|(_, &skip)| !skip) {
                for v in &mut g.data {
                    *v /= n;
                }
            }
        }
        for (name, g) in self.params.names.iter().zip(grads.iter()) {
            if !g.is_finite() {
                return Err(Error::Numeric(format!("non-finite gradient in `{name}`")));
            }
        }
        let loss = total / n;
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite loss".into()));
        }
        Ok(loss)
    }

    /// Loss and fresh gradient tensors for a `[batch, width]` tensor.
    pub fn backward(&self, batch: &Tensor, labels: &[usize]) -> Result<(f64, Vec<Tensor>)> {
        let rows: Vec<&[f64]> = (0..batch.rows()).map(|i| batch.row(i)).collect();
        let mut grads = self.params.zeros_like();
        let mut ws = self.workspace();
        let loss = self.gradients(&rows, labels, &mut grads, &mut ws, None)?;
        Ok((loss, grads))
    }

    /// One optimizer update with the configured rule and learning rate.
    pub fn step(&mut self, grads: &[Tensor]) -> Result<()> {
        let inert = self.inert();
        optimizer_step_masked(&mut self.params, grads, self.config.optimizer, self.config.learning_rate, &inert)
    }
}
