//! Dense numerical core: tensors, classifiers, losses and optimizers.

mod cnn;
pub mod config;
mod dense;
pub mod io;
pub mod loss;
pub mod model;
pub mod optim;
pub mod params;
mod recurrent;
pub mod tensor;

pub use config::{Activation, Architecture, LossKind, ModelConfig, OptimizerKind};
pub use io::ModelFile;
pub use loss::{cross_entropy, log_softmax, nll, softmax};
pub use model::{Model, Workspace};
pub use optim::optimizer_step;
pub use params::ModelParams;
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
