use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Mlp,
    Rnn,
    Gru,
    Lstm,
    Cnn,
}

impl Architecture {
    pub fn is_recurrent(self) -> bool {
        matches!(self, Architecture::Rnn | Architecture::Gru | Architecture::Lstm)
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Rnn => "rnn",
            Architecture::Gru => "gru",
            Architecture::Lstm => "lstm",
            Architecture::Cnn => "cnn",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Architecture::Mlp),
            "rnn" => Ok(Architecture::Rnn),
            "gru" => Ok(Architecture::Gru),
            "lstm" => Ok(Architecture::Lstm),
            "cnn" => Ok(Architecture::Cnn),
            other => Err(Error::config("architecture", format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// Negative log likelihood of the softmax probabilities.
    #[serde(rename = "nll")]
    Nll,
    /// Log-sum-exp cross entropy on the logits.
    #[serde(rename = "cross_entropy")]
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Everything needed to build, train and reload a classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// Features per time step.
    pub input_size: usize,
    /// MLP hidden layers, or the CNN's fully connected layers.
    pub hidden_sizes: Vec<usize>,
    pub recurrent_layers: usize,
    pub recurrent_hidden: usize,
    /// Rows per recurrent sample; 1 treats every row on its own.
    pub sequence_length: usize,
    pub conv_channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[channels, height, width]` the CNN input is reshaped to.
    pub grid: [usize; 3],
    /// Dataset columns left out of the model input.
    pub dropped_features: Vec<String>,
    pub output_classes: usize,
    pub activation: Activation,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl ModelConfig {
    /// Small MLP starting point for custom configurations.
    pub fn mlp(input_size: usize, hidden_sizes: &[usize], output_classes: usize) -> Self {
        ModelConfig {
            architecture: Architecture::Mlp,
            input_size,
            hidden_sizes: hidden_sizes.to_vec(),
            recurrent_layers: 0,
            recurrent_hidden: 0,
            sequence_length: 1,
            conv_channels: Vec::new(),
            kernel: 3,
            stride: 1,
            padding: 1,
            grid: [1, 1, input_size],
            dropped_features: Vec::new(),
            output_classes,
            activation: Activation::Relu,
            dropout: 0.0,
            learning_rate: 0.003,
            epochs: 50,
            batch_size: 1,
            loss: LossKind::Nll,
            optimizer: OptimizerKind::Sgd,
            seed: 0,
        }
    }

    pub fn recurrent(architecture: Architecture, input_size: usize, layers: usize, hidden: usize, classes: usize) -> Self {
        ModelConfig {
            architecture,
            recurrent_layers: layers,
            recurrent_hidden: hidden,
            hidden_sizes: Vec::new(),
            activation: Activation::Tanh,
            ..Self::mlp(input_size, &[], classes)
        }
    }

    pub fn cnn(grid: [usize; 3], channels: &[usize], fc: &[usize], classes: usize) -> Self {
        ModelConfig {
            architecture: Architecture::Cnn,
            conv_channels: channels.to_vec(),
            grid,
            ..Self::mlp(grid.iter().product(), fc, classes)
        }
    }

    /// Named presets: `dataset1-{mlp,rnn,gru,lstm,cnn}` and `dataset2-{mlp,rnn,gru,lstm}`.
    pub fn preset(name: &str, output_classes: usize) -> Result<Self> {
        let (dataset, arch) = name
            .split_once('-')
            .ok_or_else(|| Error::config("preset", format!("unknown model preset `{name}`")))?;
        let arch: Architecture = arch.parse()?;
        let config = match (dataset, arch) {
            ("dataset1", Architecture::Mlp) => Self::mlp(19, &[350, 400], output_classes),
            ("dataset2", Architecture::Mlp) => ModelConfig {
                epochs: 200,
                batch_size: 300,
                loss: LossKind::CrossEntropy,
                optimizer: OptimizerKind::Adam,
                ..Self::mlp(14, &[64, 140, 200, 32], output_classes)
            },
            ("dataset1", a) if a.is_recurrent() => Self::recurrent(a, 19, 3, 132, output_classes),
            ("dataset2", a) if a.is_recurrent() => ModelConfig {
                epochs: match a {
                    Architecture::Rnn => 800,
                    Architecture::Gru => 200,
                    _ => 100,
                },
                batch_size: 600,
                ..Self::recurrent(a, 14, 2, 132, output_classes)
            },
            ("dataset1", Architecture::Cnn) => ModelConfig {
                dropped_features: vec!["duration".into()],
                ..Self::cnn([1, 3, 6], &[8, 12, 18], &[350, 400], output_classes)
            },
            _ => return Err(Error::config("preset", format!("unknown model preset `{name}`"))),
        };
        config.validate()?;
        Ok(config)
    }

    /// Width of one flattened model input.
    pub fn sample_width(&self) -> usize {
        if self.architecture.is_recurrent() {
            self.input_size * self.sequence_length
        } else {
            self.input_size
        }
    }

    /// Spatial size after one convolution.
    pub fn conv_out(&self, size: usize) -> Result<usize> {
        let padded = size + 2 * self.padding;
        if padded < self.kernel {
            return Err(Error::config("kernel", format!("kernel {} larger than padded input {padded}", self.kernel)));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |field: &str, msg: String| Err(Error::config(field, msg));
        if self.input_size == 0 {
            return cfg("input_size", "must be > 0".into());
        }
        if !(self.output_classes == 2 || self.output_classes == 4) {
            return cfg("output_classes", format!("must be 2 or 4, got {}", self.output_classes));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return cfg("dropout", format!("must be in [0, 1), got {}", self.dropout));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return cfg("learning_rate", format!("must be > 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return cfg("batch_size", "must be > 0".into());
        }
        if self.sequence_length == 0 {
            return cfg("sequence_length", "must be > 0".into());
        }
        if self.hidden_sizes.contains(&0) {
            return cfg("hidden_sizes", "layer sizes must be > 0".into());
        }
        match self.architecture {
            Architecture::Mlp => {}
            Architecture::Rnn | Architecture::Gru | Architecture::Lstm => {
                if self.recurrent_layers == 0 || self.recurrent_hidden == 0 {
                    return cfg("recurrent_layers", "recurrent models need layers and hidden size > 0".into());
                }
            }
            Architecture::Cnn => {
                if self.grid.iter().product::<usize>() != self.input_size {
                    return cfg(
                        "grid",
                        format!("grid {:?} does not hold {} inputs", self.grid, self.input_size),
                    );
                }
                if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
                    return cfg("conv_channels", "need at least one layer of > 0 channels".into());
                }
                if self.kernel == 0 || self.stride == 0 {
                    return cfg("kernel", "kernel and stride must be > 0".into());
                }
                let (mut h, mut w) = (self.grid[1], self.grid[2]);
                for _ in &self.conv_channels {
                    h = self.conv_out(h)?;
                    w = self.conv_out(w)?;
                }
            }
        }
        if self.sequence_length > 1 && !self.architecture.is_recurrent() {
            return cfg("sequence_length", "only recurrent models take sequences".into());
        }
        Ok(())
    }

    /// Model input columns: `columns` minus the dropped ones.
    pub fn select_columns<'a>(&self, columns: &[&'a str]) -> Result<Vec<&'a str>> {
        for d in &self.dropped_features {
            if !columns.contains(&d.as_str()) {
                return Err(Error::Schema(format!("dropped feature `{d}` is not a dataset column")));
            }
        }
        let kept: Vec<&str> = columns
            .iter()
            .copied()
            .filter(|c| !self.dropped_features.iter().any(|d| d == c))
            .collect();
        if kept.len() != self.input_size {
            return Err(Error::dimension("model input columns", self.input_size, kept.len()));
        }
        Ok(kept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_presets() {
        let m = ModelConfig::preset("dataset1-mlp", 2).unwrap();
        assert_eq!((m.input_size, m.hidden_sizes.clone(), m.epochs, m.batch_size), (19, vec![350, 400], 50, 1));
        assert_eq!((m.loss, m.optimizer, m.learning_rate, m.dropout), (LossKind::Nll, OptimizerKind::Sgd, 0.003, 0.0));
        let m = ModelConfig::preset("dataset2-mlp", 4).unwrap();
        assert_eq!(m.hidden_sizes, vec![64, 140, 200, 32]);
        assert_eq!((m.epochs, m.batch_size, m.loss, m.optimizer), (200, 300, LossKind::CrossEntropy, OptimizerKind::Adam));
        let g = ModelConfig::preset("dataset1-gru", 4).unwrap();
        assert_eq!((g.recurrent_layers, g.recurrent_hidden, g.activation), (3, 132, Activation::Tanh));
        let r = ModelConfig::preset("dataset2-rnn", 2).unwrap();
        assert_eq!((r.recurrent_layers, r.epochs, r.batch_size), (2, 800, 600));
        assert_eq!(ModelConfig::preset("dataset2-lstm", 2).unwrap().epochs, 100);
        let c = ModelConfig::preset("dataset1-cnn", 2).unwrap();
        assert_eq!((c.input_size, c.grid, c.conv_channels.clone()), (18, [1, 3, 6], vec![8, 12, 18]));
        assert!(ModelConfig::preset("dataset2-cnn", 2).is_err());
    }

    #[test]
    fn cnn_drops_one_column() {
        let c = ModelConfig::preset("dataset1-cnn", 2).unwrap();
        let cols = crate::features::schema::FEATURES_FULL;
        let kept = c.select_columns(&cols).unwrap();
        assert_eq!(kept.len(), 18);
        assert!(!kept.contains(&"duration"));
    }

    #[test]
    fn validation_names_fields() {
        let mut c = ModelConfig::mlp(4, &[3], 2);
        c.output_classes = 3;
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "output_classes"));
        let mut c = ModelConfig::mlp(4, &[3], 2);
        c.dropout = 1.0;
        assert!(c.validate().is_err());
    }
}
