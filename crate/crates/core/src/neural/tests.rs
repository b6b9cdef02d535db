use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn toy_batch(width: usize, n: usize, classes: usize, seed: u64) -> (Tensor, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..width * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels = (0..n).map(|i| i % classes).collect();
    (Tensor::from_vec(&[n, width], data).unwrap(), labels)
}

/// Fraction of parameters whose analytic gradient matches central differences.
fn gradient_agreement(model: &Model, batch: &Tensor, labels: &[usize]) -> (f64, f64) {
    let (_, grads) = model.backward(batch, labels).unwrap();
    let eps = 1e-4;
    let mut probe = model.clone();
    let (mut ok, mut total, mut worst) = (0usize, 0usize, 0.0f64);
    for (ti, g) in grads.iter().enumerate() {
        for j in 0..g.data.len() {
            let orig = probe.params.tensors[ti].data[j];
            probe.params.tensors[ti].data[j] = orig + eps;
            let up = probe.loss(batch, labels).unwrap();
            probe.params.tensors[ti].data[j] = orig - eps;
            let down = probe.loss(batch, labels).unwrap();
            probe.params.tensors[ti].data[j] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = g.data[j];
            let scale = analytic.abs().max(numeric.abs());
            let rel = if scale < 1e-9 { 0.0 } else { (analytic - numeric).abs() / scale };
            worst = worst.max(rel);
            ok += (rel < 1e-4) as usize;
            total += 1;
        }
    }
    (ok as f64 / total as f64, worst)
}

fn assert_gradients(config: ModelConfig) {
    let model = Model::new(config.clone()).unwrap();
    let (batch, labels) = toy_batch(config.sample_width(), 5, config.output_classes, 11);
    let (frac, worst) = gradient_agreement(&model, &batch, &labels);
    assert!(frac >= 0.99, "{:?}: {frac} agree, worst {worst}", config.architecture);
}

#[test]
fn gradient_check_mlp() {
    assert_gradients(ModelConfig::mlp(4, &[3, 5], 2));
    assert_gradients(ModelConfig { activation: Activation::Tanh, ..ModelConfig::mlp(4, &[3], 4) });
}

#[test]
fn gradient_check_recurrent() {
    for arch in [Architecture::Rnn, Architecture::Gru, Architecture::Lstm] {
        assert_gradients(ModelConfig::recurrent(arch, 4, 2, 3, 2));
        assert_gradients(ModelConfig { sequence_length: 3, ..ModelConfig::recurrent(arch, 4, 2, 3, 4) });
    }
}

#[test]
fn gradient_check_cnn() {
    assert_gradients(ModelConfig::cnn([1, 2, 3], &[2, 3], &[4], 2));
    assert_gradients(ModelConfig { stride: 2, ..ModelConfig::cnn([2, 3, 3], &[2], &[3], 4) });
}

#[test]
fn gru_cell_with_zero_weights_halves_the_state() {
    let config = ModelConfig::recurrent(Architecture::Gru, 2, 1, 3, 2);
    let mut params = ModelParams::init(&config).unwrap();
    for t in &mut params.tensors {
        t.fill(0.0);
    }
    let h = [0.8, -0.4, 2.0];
    let (next, _) = super::recurrent::cell(Architecture::Gru, Activation::Tanh, &params.tensors[..4], &[1.0, -1.0], &h, &[0.0; 3]);
    assert_eq!(next, vec![0.4, -0.2, 1.0]);
}

#[test]
fn probabilities_are_distributions() {
    for config in [
        ModelConfig::mlp(4, &[6], 4),
        ModelConfig::recurrent(Architecture::Lstm, 4, 1, 5, 2),
        ModelConfig::cnn([1, 2, 2], &[2], &[3], 4),
    ] {
        let model = Model::new(config.clone()).unwrap();
        let (batch, _) = toy_batch(config.sample_width(), 7, 2, 3);
        let p = model.forward(&batch).unwrap();
        assert_eq!(p.shape, vec![7, config.output_classes]);
        for i in 0..7 {
            let row = p.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }
}

#[test]
fn cnn_shape_walk() {
    let config = ModelConfig::preset("dataset1-cnn", 2).unwrap();
    let model = Model::new(config).unwrap();
    let shapes: Vec<Vec<usize>> = model.params.tensors.iter().map(|t| t.shape.clone()).collect();
    assert_eq!(
        shapes,
        vec![
            vec![8, 1, 3, 3],
            vec![8],
            vec![12, 8, 3, 3],
            vec![12],
            vec![18, 12, 3, 3],
            vec![18],
            vec![350, 324],
            vec![350],
            vec![400, 350],
            vec![400],
            vec![2, 400],
            vec![2],
        ]
    );
    let (batch, _) = toy_batch(18, 2, 2, 1);
    assert_eq!(model.forward(&batch).unwrap().shape, vec![2, 2]);
}

#[test]
fn width_mismatch_is_a_dimension_error() {
    let model = Model::new(ModelConfig::mlp(4, &[3], 2)).unwrap();
    let (batch, _) = toy_batch(5, 1, 2, 0);
    assert!(matches!(model.forward(&batch), Err(crate::Error::Dimension { .. })));
    assert!(matches!(model.loss(&toy_batch(4, 1, 2, 0).0, &[7]), Err(crate::Error::Label(_))));
}

#[test]
fn zero_input_gives_bias_only_gradients() {
    let model = Model::new(ModelConfig::mlp(3, &[], 2)).unwrap();
    let batch = Tensor::zeros(&[2, 3]);
    let (_, grads) = model.backward(&batch, &[0, 1]).unwrap();
    assert!(grads[0].data.iter().all(|&g| g == 0.0));
    let p = softmax(&model.params.tensors[1].data);
    let expected = [((p[0] - 1.0) + p[0]) / 2.0, (p[1] + (p[1] - 1.0)) / 2.0];
    for (g, e) in grads[1].data.iter().zip(expected) {
        assert!((g - e).abs() < 1e-15);
    }
}

#[test]
fn zero_dropout_is_identity() {
    let config = ModelConfig::mlp(4, &[5, 5], 2);
    let model = Model::new(config).unwrap();
    let (batch, labels) = toy_batch(4, 3, 2, 5);
    let rows: Vec<&[f64]> = (0..3).map(|i| batch.row(i)).collect();
    let mut ws = model.workspace();
    let mut g1 = model.params.zeros_like();
    let mut g2 = model.params.zeros_like();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    model.gradients(&rows, &labels, &mut g1, &mut ws, None).unwrap();
    model.gradients(&rows, &labels, &mut g2, &mut ws, Some(&mut rng)).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn dropout_changes_training_passes_only() {
    let config = ModelConfig { dropout: 0.5, ..ModelConfig::mlp(4, &[16], 2) };
    let model = Model::new(config).unwrap();
    let (batch, labels) = toy_batch(4, 1, 2, 5);
    let mut ws = model.workspace();
    let mut g = model.params.zeros_like();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let train = model.gradients(&[batch.row(0)], &labels, &mut g, &mut ws, Some(&mut rng)).unwrap();
    let eval = model.loss(&batch, &labels).unwrap();
    assert_ne!(train, eval);
    assert_eq!(eval, model.loss(&batch, &labels).unwrap());
}

#[test]
fn training_steps_are_deterministic() {
    let run = || {
        let mut model = Model::new(ModelConfig { optimizer: OptimizerKind::Adam, ..ModelConfig::mlp(4, &[6], 2) }).unwrap();
        let (batch, labels) = toy_batch(4, 8, 2, 9);
        for _ in 0..5 {
            let (_, g) = model.backward(&batch, &labels).unwrap();
            model.step(&g).unwrap();
        }
        model
    };
    assert_eq!(run(), run());
}

#[test]
fn model_file_round_trip_is_bit_exact() {
    for config in [
        ModelConfig { optimizer: OptimizerKind::Adam, ..ModelConfig::mlp(4, &[3], 2) },
        ModelConfig::recurrent(Architecture::Gru, 4, 2, 3, 4),
        ModelConfig::cnn([1, 2, 2], &[2], &[3], 2),
    ] {
        let mut model = Model::new(config.clone()).unwrap();
        let (batch, labels) = toy_batch(4, 3, 2, 4);
        let (_, g) = model.backward(&batch, &labels).unwrap();
        model.step(&g).unwrap();
        let file = ModelFile {
            model: model.clone(),
            feature_columns: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            normalization: Some(
                crate::features::NormalizationParams::fit(&["a", "b", "c", "d"], &[vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 4.5]])
                    .unwrap(),
            ),
        };
        let mut buf = Vec::new();
        file.write(&mut buf).unwrap();
        let back = ModelFile::read(buf.as_slice()).unwrap();
        assert_eq!(back, file);
        let a = model.forward(&batch).unwrap();
        let b = back.model.forward(&batch).unwrap();
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn corrupt_model_file_is_rejected() {
    assert!(matches!(ModelFile::read(&b"NOTAMODEL-------"[..]), Err(crate::Error::Schema(_))));
    let file = ModelFile {
        model: Model::new(ModelConfig::mlp(2, &[2], 2)).unwrap(),
        feature_columns: vec!["a".into(), "b".into()],
        normalization: None,
    };
    let mut buf = Vec::new();
    file.write(&mut buf).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(ModelFile::read(buf.as_slice()).is_err());
}
