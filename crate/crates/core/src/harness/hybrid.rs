use super::metrics::{argmax, predict_proba, Metrics};
use super::samples::Samples;
use crate::error::{Error, Result};
use crate::features::Label;
use crate::neural::{Model, ModelFile, Tensor};

/// Merges the two members' class distributions.
///
/// With four classes the flood probability comes from the MLP, the jamming
/// probability from the GRU, and the other two are averaged; with two
/// classes both are averaged. The result is renormalized.
pub fn combine(mlp: &[f64], gru: &[f64]) -> Result<Vec<f64>> {
    if mlp.len() != gru.len() {
        return Err(Error::dimension("hybrid member classes", mlp.len(), gru.len()));
    }
    let mut q: Vec<f64> = mlp.iter().zip(gru).map(|(a, b)| 0.5 * (a + b)).collect();
    match mlp.len() {
        2 => {}
        4 => {
            q[Label::UdpFlood.index()] = mlp[Label::UdpFlood.index()];
            q[Label::Jamming.index()] = gru[Label::Jamming.index()];
        }
        n => return Err(Error::config("output_classes", format!("hybrid needs 2 or 4 classes, got {n}"))),
    }
    let total: f64 = q.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numeric(format!("hybrid probabilities sum to {total}")));
    }
    for v in &mut q {
        *v /= total;
    }
    Ok(q)
}

fn check_pair(mlp: &Model, gru: &Model) -> Result<()> {
    let (a, b) = (&mlp.config, &gru.config);
    if a.output_classes != b.output_classes {
        return Err(Error::Schema(format!(
            "hybrid members disagree on classes: {} vs {}",
            a.output_classes, b.output_classes
        )));
    }
    if a.sample_width() != b.sample_width() {
        return Err(Error::Schema(format!(
            "hybrid members disagree on input width: {} vs {}",
            a.sample_width(),
            b.sample_width()
        )));
    }
    Ok(())
}

/// Combined class distributions for every row of `batch`.
pub fn hybrid_proba(mlp: &Model, gru: &Model, batch: &Tensor) -> Result<Vec<Vec<f64>>> {
    check_pair(mlp, gru)?;
    let samples = Samples::new(batch.clone(), vec![0; batch.rows()])?;
    let a = predict_proba(mlp, &samples)?;
    let b = predict_proba(gru, &samples)?;
    a.iter().zip(&b).map(|(p, q)| combine(p, q)).collect()
}

/// Class per sample under the MLP+GRU combination rule.
pub fn hybrid_predict(mlp: &Model, gru: &Model, batch: &Tensor) -> Result<Vec<usize>> {
    Ok(hybrid_proba(mlp, gru, batch)?.iter().map(|p| argmax(p)).collect())
}

pub fn evaluate_hybrid(mlp: &Model, gru: &Model, test: &Samples) -> Result<Metrics> {
    let probs = hybrid_proba(mlp, gru, &test.x)?;
    Metrics::from_probabilities(&test.y, &probs, mlp.config.output_classes)
}

/// A trained classifier applied to raw feature rows of a known column set.
#[derive(Debug, Clone)]
pub enum Predictor {
    Single(ModelFile),
    Hybrid { mlp: ModelFile, gru: ModelFile },
}

impl Predictor {
    pub fn classes(&self) -> usize {
        match self {
            Predictor::Single(m) => m.model.config.output_classes,
            Predictor::Hybrid { mlp, .. } => mlp.model.config.output_classes,
        }
    }

    fn members(&self) -> Vec<&ModelFile> {
        match self {
            Predictor::Single(m) => vec![m],
            Predictor::Hybrid { mlp, gru } => vec![mlp, gru],
        }
    }

    /// Errors unless every member can read rows with `columns` one sample
    /// at a time.
    pub fn check_columns(&self, columns: &[&str]) -> Result<()> {
        if let Predictor::Hybrid { mlp, gru } = self {
            check_pair(&mlp.model, &gru.model)?;
        }
        for m in self.members() {
            if m.model.config.architecture.is_recurrent() && m.model.config.sequence_length > 1 {
                return Err(Error::config("sequence_length", "per-packet prediction needs length-1 sequences"));
            }
            if let Some(c) = m.feature_columns.iter().find(|c| !columns.contains(&c.as_str())) {
                return Err(Error::Schema(format!("model input `{c}` is not among the data columns")));
            }
        }
        Ok(())
    }

    /// Class distribution per raw row.
    pub fn predict_proba(&self, columns: &[&str], rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_columns(columns)?;
        let per_member = self
            .members()
            .into_iter()
            .map(|m| {
                let mut ws = m.model.workspace();
                rows.iter()
                    .map(|r| {
                        let x = m.prepare_row(columns, r)?;
                        m.model.predict_proba_one(&x, &mut ws)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        match per_member.as_slice() {
            [single] => Ok(single.clone()),
            [a, b] => a.iter().zip(b).map(|(p, q)| combine(p, q)).collect(),
            _ => unreachable!("one or two members"),
        }
    }

    pub fn predict(&self, columns: &[&str], rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(columns, rows)?.iter().map(|p| argmax(p)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::ModelConfig;
    use proptest::prelude::*;

    #[test]
    fn mlp_owns_flood() {
        let mlp = [0.05, 0.9, 0.03, 0.02];
        let gru = [0.8, 0.1, 0.05, 0.05];
        let q = combine(&mlp, &gru).unwrap();
        // Unnormalized: [0.425, 0.9, 0.04, 0.05].
        let total = 0.425 + 0.9 + 0.04 + 0.05;
        assert!((q[1] - 0.9 / total).abs() < 1e-15);
        assert_eq!(argmax(&q), 1);
    }

    #[test]
    fn gru_owns_jamming() {
        let q = combine(&[0.6, 0.0, 0.0, 0.4], &[0.3, 0.0, 0.0, 0.7]).unwrap();
        assert_eq!(argmax(&q), 3);
    }

    #[test]
    fn identical_members_agree_with_either() {
        let p = [0.1, 0.2, 0.6, 0.1];
        assert_eq!(argmax(&combine(&p, &p).unwrap()), argmax(&p));
    }

    #[test]
    fn tie_goes_to_the_lower_class() {
        let q = combine(&[0.25, 0.5, 0.25, 0.0], &[0.5, 0.0, 0.0, 0.5]).unwrap();
        // Unnormalized: [0.375, 0.5, 0.125, 0.5].
        assert_eq!(q[1], q[3]);
        assert_eq!(argmax(&q), 1);
    }

    #[test]
    fn mismatched_members_are_rejected() {
        let a = Model::new(ModelConfig::mlp(4, &[3], 2)).unwrap();
        let b = Model::new(ModelConfig::mlp(5, &[3], 2)).unwrap();
        assert!(matches!(hybrid_predict(&a, &b, &Tensor::zeros(&[1, 4])), Err(Error::Schema(_))));
        let c = Model::new(ModelConfig::mlp(4, &[3], 4)).unwrap();
        assert!(matches!(hybrid_predict(&a, &c, &Tensor::zeros(&[1, 4])), Err(Error::Schema(_))));
    }

    proptest! {
        #[test]
        fn scaling_a_member_does_not_change_the_choice(
            a in proptest::collection::vec(0.01f64..1.0, 4),
            b in proptest::collection::vec(0.01f64..1.0, 4),
            k in 0.01f64..100.0,
        ) {
            let base = argmax(&combine(&a, &b).unwrap());
            let ka: Vec<f64> = a.iter().map(|v| v * k).collect();
            let kb: Vec<f64> = b.iter().map(|v| v * k).collect();
            prop_assert_eq!(argmax(&combine(&ka, &kb).unwrap()), base);
        }
    }
}
