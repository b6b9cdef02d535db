use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{EpochRecord, History};
use super::samples::Samples;
use crate::error::{Error, Result};
use crate::neural::{Model, ModelConfig};

/// The validation-best model and the per-epoch losses.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: History,
    /// Epoch (1-based) the returned parameters come from; `None` when no
    /// epoch ran.
    pub best_epoch: Option<usize>,
}

fn at_epoch(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}: {m}")),
        other => other,
    }
}

/// Trains a freshly initialized model for `config.epochs` epochs.
pub fn train(config: &ModelConfig, train: &Samples, validation: &Samples) -> Result<TrainOutcome> {
    train_model(Model::new(config.clone())?, train, validation)
}

/// Trains `model` further, keeping the parameters with the lowest
/// validation loss.
pub fn train_model(mut model: Model, train: &Samples, validation: &Samples) -> Result<TrainOutcome> {
    let config = model.config.clone();
    let width = config.sample_width();
    for (name, s) in [("training", train), ("validation", validation)] {
        if s.is_empty() {
            return Err(Error::Data(format!("empty {name} set")));
        }
        if s.width() != width {
            return Err(Error::dimension(format!("{name} feature width"), width, s.width()));
        }
        if let Some(&y) = s.y.iter().find(|&&y| y >= config.output_classes) {
            return Err(Error::Label(format!("{name} label {y} outside 0..{}", config.output_classes)));
        }
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5348_5546));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x4452_4f50));
    let use_dropout = config.dropout > 0.0;
    let mut grads = model.params.zeros_like();
    let mut ws = model.workspace();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = History::default();
    let mut best: Option<(f64, usize, Model)> = None;
    let batch = config.batch_size.max(1);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        let mut rows: Vec<&[f64]> = Vec::with_capacity(batch);
        let mut labels = Vec::with_capacity(batch);
        for chunk in order.chunks(batch) {
            rows.clear();
            labels.clear();
            for &i in chunk {
                rows.push(train.row(i));
                labels.push(train.y[i]);
            }
            let rng = if use_dropout { Some(&mut dropout_rng) } else { None };
            let loss = model.gradients(&rows, &labels, &mut grads, &mut ws, rng).map_err(|e| at_epoch(epoch, e))?;
            model.step(&grads).map_err(|e| at_epoch(epoch, e))?;
            total += loss * chunk.len() as f64;
        }
        let train_loss = total / train.len() as f64;
        let val_loss = model.loss(&validation.x, &validation.y).map_err(|e| at_epoch(epoch, e))?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Numeric(format!("epoch {epoch}: loss train {train_loss} validation {val_loss}")));
        }
        log::info!("epoch {epoch}/{}: train {train_loss:.6} validation {val_loss:.6}", config.epochs);
        history.records.push(EpochRecord { epoch, train_loss, val_loss });
        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, model.clone()));
        }
    }

    Ok(match best {
        Some((_, epoch, best)) => TrainOutcome { model: best, history, best_epoch: Some(epoch) },
        None => TrainOutcome { model, history, best_epoch: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::evaluate;
    use crate::neural::{OptimizerKind, Tensor};

    /// Two blobs on either side of x0 + x1 = 1.
    fn separable(n: usize) -> Samples {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let a = (i as f64 * 0.618_034).fract();
            let b = (i as f64 * 0.414_214).fract();
            let c = i % 2;
            let shift = if c == 1 { 0.6 } else { -0.6 };
            rows.push(vec![0.5 + 0.3 * (a - 0.5) + shift, 0.5 + 0.3 * (b - 0.5) + shift]);
            y.push(c);
        }
        Samples::from_rows(&rows, y).unwrap()
    }

    fn toy_config(epochs: usize) -> ModelConfig {
        ModelConfig { epochs, learning_rate: 0.05, seed: 3, ..ModelConfig::mlp(2, &[8], 2) }
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = separable(60);
        let out = train(&toy_config(50), &data, &data).unwrap();
        assert_eq!(evaluate(&out.model, &data).unwrap().accuracy, 1.0);
        let h = &out.history.records;
        assert_eq!(h.len(), 50);
        assert!(h[49].train_loss < 0.1 * h[0].train_loss, "{} vs {}", h[49].train_loss, h[0].train_loss);
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let data = separable(10);
        let out = train(&toy_config(0), &data, &data).unwrap();
        assert_eq!(out.model, Model::new(toy_config(0)).unwrap());
        assert!(out.history.records.is_empty());
        assert_eq!(out.best_epoch, None);
    }

    #[test]
    fn poisoned_validation_keeps_an_early_snapshot() {
        let data = separable(40);
        let mut poisoned = data.clone();
        for y in &mut poisoned.y {
            *y = 1 - *y;
        }
        let out = train(&toy_config(20), &data, &poisoned).unwrap();
        let h = &out.history.records;
        let k = (0..h.len()).fold(0, |b, i| if h[i].val_loss < h[b].val_loss { i } else { b }) + 1;
        assert!(k < h.len(), "validation loss should rise on flipped labels");
        assert_eq!(out.best_epoch, Some(k));
        assert_eq!(out.model.loss(&poisoned.x, &poisoned.y).unwrap(), h[k - 1].val_loss);
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable(30);
        let c = ModelConfig { optimizer: OptimizerKind::Adam, batch_size: 4, learning_rate: 0.01, ..toy_config(5) };
        assert_eq!(train(&c, &data, &data).unwrap().model, train(&c, &data, &data).unwrap().model);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let data = Samples::new(Tensor::zeros(&[3, 5]), vec![0, 1, 0]).unwrap();
        assert!(matches!(train(&toy_config(1), &data, &data), Err(Error::Dimension { .. })));
    }

    #[test]
    fn divergence_reports_the_epoch() {
        let data = separable(20);
        let c = ModelConfig { learning_rate: 1e308, ..toy_config(3) };
        match train(&c, &data, &data) {
            Err(Error::Numeric(m)) => assert!(m.starts_with("epoch 1"), "{m}"),
            other => panic!("expected a numeric error, got {other:?}"),
        }
    }
}
