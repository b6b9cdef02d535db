use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Architecture, ModelConfig};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam moment buffers, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

/// Named parameter tensors in a fixed order, plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
    pub adam: Option<AdamState>,
}

/// `(name, shape, fan_in)` for every parameter of a configuration.
pub fn param_layout(config: &ModelConfig) -> Result<Vec<(String, Vec<usize>, usize)>> {
    config.validate()?;
    let mut out = Vec::new();
    let dense = |out: &mut Vec<_>, prefix: &str, first: usize, sizes: &[usize], classes: usize| {
        let mut fan_in = first;
        for (l, &n) in sizes.iter().chain(std::iter::once(&classes)).enumerate() {
            out.push((format!("{prefix}{l}.weight"), vec![n, fan_in], fan_in));
            out.push((format!("{prefix}{l}.bias"), vec![n], fan_in));
            fan_in = n;
        }
    };
    match config.architecture {
        Architecture::Mlp => dense(&mut out, "fc", config.input_size, &config.hidden_sizes, config.output_classes),
        Architecture::Rnn | Architecture::Gru | Architecture::Lstm => {
            let gates = gate_count(config.architecture);
            let h = config.recurrent_hidden;
            let name = config.architecture.name();
            for k in 0..config.recurrent_layers {
                let n_in = if k == 0 { config.input_size } else { h };
                out.push((format!("{name}{k}.weight_ih"), vec![gates * h, n_in], n_in));
                out.push((format!("{name}{k}.weight_hh"), vec![gates * h, h], h));
                out.push((format!("{name}{k}.bias_ih"), vec![gates * h], h));
                out.push((format!("{name}{k}.bias_hh"), vec![gates * h], h));
            }
            dense(&mut out, "head", h, &[], config.output_classes);
        }
        Architecture::Cnn => {
            let [mut c, mut hgt, mut wid] = config.grid;
            for (l, &co) in config.conv_channels.iter().enumerate() {
                let fan_in = c * config.kernel * config.kernel;
                out.push((format!("conv{l}.weight"), vec![co, c, config.kernel, config.kernel], fan_in));
                out.push((format!("conv{l}.bias"), vec![co], fan_in));
                c = co;
                hgt = config.conv_out(hgt)?;
                wid = config.conv_out(wid)?;
            }
            dense(&mut out, "fc", c * hgt * wid, &config.hidden_sizes, config.output_classes);
        }
    }
    Ok(out)
}

pub(crate) fn gate_count(arch: Architecture) -> usize {
    match arch {
        Architecture::Gru => 3,
        Architecture::Lstm => 4,
        _ => 1,
    }
}

impl ModelParams {
    /// Uniform in `±1/√fan_in`, drawn in layout order from the config seed.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape, fan_in) in param_layout(config)? {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut t = Tensor::zeros(&shape);
            for x in &mut t.data {
                *x = rng.gen_range(-bound..=bound);
            }
            names.push(name);
            tensors.push(t);
        }
        Ok(ModelParams { names, tensors, adam: None })
    }

    pub fn zeros_like(&self) -> Vec<Tensor> {
        self.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(move |i| &mut self.tensors[i])
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Errors unless names and shapes match the configuration.
    pub fn check_against(&self, config: &ModelConfig) -> Result<()> {
        let layout = param_layout(config)?;
        if layout.len() != self.tensors.len() {
            return Err(Error::dimension("parameter count", layout.len(), self.tensors.len()));
        }
        for ((name, shape, _), (n, t)) in layout.iter().zip(self.names.iter().zip(&self.tensors)) {
            if name != n || *shape != t.shape {
                return Err(Error::dimension(
                    format!("parameter `{name}`"),
                    format!("{shape:?}"),
                    format!("`{n}` {:?}", t.shape),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_bounded() {
        let c = ModelConfig::mlp(19, &[350, 400], 2);
        let a = ModelParams::init(&c).unwrap();
        assert_eq!(a, ModelParams::init(&c).unwrap());
        let w = a.get("fc0.weight").unwrap();
        assert_eq!(w.shape, vec![350, 19]);
        let bound = 1.0 / 19f64.sqrt();
        assert!(w.data.iter().all(|x| x.abs() <= bound));
        let other = ModelParams::init(&ModelConfig { seed: 1, ..c }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn recurrent_and_cnn_layouts() {
        let g = ModelParams::init(&ModelConfig::preset("dataset1-gru", 4).unwrap()).unwrap();
        assert_eq!(g.get("gru0.weight_ih").unwrap().shape, vec![396, 19]);
        assert_eq!(g.get("gru2.weight_hh").unwrap().shape, vec![396, 132]);
        assert_eq!(g.get("head0.weight").unwrap().shape, vec![4, 132]);
        let c = ModelParams::init(&ModelConfig::preset("dataset1-cnn", 2).unwrap()).unwrap();
        assert_eq!(c.get("conv2.weight").unwrap().shape, vec![18, 12, 3, 3]);
        assert_eq!(c.get("fc0.weight").unwrap().shape, vec![350, 324]);
        assert_eq!(c.get("fc2.weight").unwrap().shape, vec![2, 400]);
    }
}
