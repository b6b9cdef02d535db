use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::samples::Samples;
use crate::error::{Error, Result};
use crate::neural::Model;

/// Binary outcome counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// Classification quality over one labelled set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub classes: usize,
    pub total: u64,
    pub accuracy: f64,
    /// `None` when no sample was predicted positive (binary), or when no
    /// class received a prediction (multiclass macro average).
    pub precision: Option<f64>,
    /// `None` when there are no actual positives.
    pub recall: Option<f64>,
    /// Mean probability given to the true class, reported as `sum_prob`.
    pub mean_correct_probability: f64,
    /// `counts[pred][true]`.
    pub counts: Vec<Vec<u64>>,
    /// `counts` with each true-class column divided by its total.
    pub confusion: Vec<Vec<f64>>,
    pub binary: Option<BinaryCounts>,
    pub per_class_precision: Vec<Option<f64>>,
    pub per_class_recall: Vec<Option<f64>>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

impl Metrics {
    /// Metrics from true labels, predictions and the probability each
    /// sample's prediction gave to its true class.
    pub fn compute(labels: &[usize], predictions: &[usize], p_true: &[f64], classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Data("cannot evaluate on an empty set".into()));
        }
        if predictions.len() != labels.len() {
            return Err(Error::dimension("predictions", labels.len(), predictions.len()));
        }
        if p_true.len() != labels.len() {
            return Err(Error::dimension("true-class probabilities", labels.len(), p_true.len()));
        }
        if classes < 2 {
            return Err(Error::config("classes", format!("need at least 2, got {classes}")));
        }
        let mut counts = vec![vec![0u64; classes]; classes];
        for (&t, &p) in labels.iter().zip(predictions) {
            if t >= classes || p >= classes {
                return Err(Error::Label(format!("class index {} outside 0..{classes}", t.max(p))));
            }
            counts[p][t] += 1;
        }
        if let Some(p) = p_true.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Numeric(format!("true-class probability {p} outside [0,1]")));
        }
        let total = labels.len() as u64;
        let correct: u64 = (0..classes).map(|c| counts[c][c]).sum();
        let predicted = |c: usize| counts[c].iter().sum::<u64>();
        let actual = |c: usize| counts.iter().map(|row| row[c]).sum::<u64>();
        let per_class_precision: Vec<Option<f64>> = (0..classes).map(|c| ratio(counts[c][c], predicted(c))).collect();
        let per_class_recall: Vec<Option<f64>> = (0..classes).map(|c| ratio(counts[c][c], actual(c))).collect();

        let (precision, recall, binary) = if classes == 2 {
            let b = BinaryCounts { tp: counts[1][1], fp: counts[1][0], tn: counts[0][0], fn_: counts[0][1] };
            (ratio(b.tp, b.tp + b.fp), ratio(b.tp, b.tp + b.fn_), Some(b))
        } else {
            (mean_defined(&per_class_precision), mean_defined(&per_class_recall), None)
        };

        let confusion = (0..classes)
            .map(|p| {
                (0..classes)
                    .map(|t| match actual(t) {
                        0 => 0.0,
                        n => counts[p][t] as f64 / n as f64,
                    })
                    .collect()
            })
            .collect();

        Ok(Metrics {
            classes,
            total,
            accuracy: correct as f64 / total as f64,
            precision,
            recall,
            mean_correct_probability: p_true.iter().sum::<f64>() / total as f64,
            counts,
            confusion,
            binary,
            per_class_precision,
            per_class_recall,
        })
    }

    /// Metrics from per-sample probability rows, predicting the arg-max.
    pub fn from_probabilities(labels: &[usize], probs: &[Vec<f64>], classes: usize) -> Result<Self> {
        if probs.len() != labels.len() {
            return Err(Error::dimension("probability rows", labels.len(), probs.len()));
        }
        let mut preds = Vec::with_capacity(labels.len());
        let mut p_true = Vec::with_capacity(labels.len());
        for (p, &y) in probs.iter().zip(labels) {
            if p.len() != classes {
                return Err(Error::dimension("probability row", classes, p.len()));
            }
            if y >= classes {
                return Err(Error::Label(format!("class index {y} outside 0..{classes}")));
            }
            preds.push(argmax(p));
            p_true.push(p[y]);
        }
        Self::compute(labels, &preds, &p_true, classes)
    }

    /// `metric,value` rows; undefined ratios are written as `undefined`.
    pub fn write_csv<W: Write>(&self, mut w: W, class_names: &[&str]) -> Result<()> {
        if class_names.len() != self.classes {
            return Err(Error::dimension("class names", self.classes, class_names.len()));
        }
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| x.to_string());
        writeln!(w, "metric,value")?;
        writeln!(w, "classes,{}", self.classes)?;
        writeln!(w, "total,{}", self.total)?;
        writeln!(w, "accuracy,{}", self.accuracy)?;
        writeln!(w, "precision,{}", opt(self.precision))?;
        writeln!(w, "recall,{}", opt(self.recall))?;
        writeln!(w, "sum_prob,{}", self.mean_correct_probability)?;
        if let Some(b) = self.binary {
            writeln!(w, "tp,{}\nfp,{}\ntn,{}\nfn,{}", b.tp, b.fp, b.tn, b.fn_)?;
        }
        for (c, name) in class_names.iter().enumerate() {
            writeln!(w, "precision:{name},{}", opt(self.per_class_precision[c]))?;
            writeln!(w, "recall:{name},{}", opt(self.per_class_recall[c]))?;
        }
        for (p, pn) in class_names.iter().enumerate() {
            for (t, tn) in class_names.iter().enumerate() {
                writeln!(w, "count:{pn}:{tn},{}", self.counts[p][t])?;
            }
        }
        for (p, pn) in class_names.iter().enumerate() {
            for (t, tn) in class_names.iter().enumerate() {
                writeln!(w, "confusion:{pn}:{tn},{}", self.confusion[p][t])?;
            }
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path, class_names: &[&str]) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, class_names)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Human-readable summary with the confusion matrix in percent
    /// (rows predicted, columns true).
    pub fn table(&self, class_names: &[&str]) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{:.2}%", 100.0 * x));
        let mut s = String::new();
        let _ = writeln!(s, "samples    {}", self.total);
        let _ = writeln!(s, "accuracy   {}", pct(Some(self.accuracy)));
        let _ = writeln!(s, "precision  {}", pct(self.precision));
        let _ = writeln!(s, "recall     {}", pct(self.recall));
        let _ = writeln!(s, "sum_prob   {}", pct(Some(self.mean_correct_probability)));
        let width = class_names.iter().map(|n| n.len()).max().unwrap_or(8).max(8);
        let _ = write!(s, "\n{:width$}", "pred\\true");
        for n in class_names {
            let _ = write!(s, "  {n:>width$}");
        }
        let _ = writeln!(s);
        for (p, pn) in class_names.iter().enumerate() {
            let _ = write!(s, "{pn:width$}");
            for t in 0..self.classes {
                let _ = write!(s, "  {:>width$}", format!("{:.2}%", 100.0 * self.confusion[p][t]));
            }
            let _ = writeln!(s);
        }
        s
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Softmax outputs of `model` for every sample.
pub fn predict_proba(model: &Model, samples: &Samples) -> Result<Vec<Vec<f64>>> {
    let mut ws = model.workspace();
    (0..samples.len()).map(|i| model.predict_proba_one(samples.row(i), &mut ws)).collect()
}

/// Test-set metrics of a single model.
pub fn evaluate(model: &Model, test: &Samples) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty set".into()));
    }
    let probs = predict_proba(model, test)?;
    Metrics::from_probabilities(&test.y, &probs, model.config.output_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<usize>, Vec<usize>) {
        let mut y = Vec::new();
        let mut p = Vec::new();
        for (n, t, q) in [(tp, 1, 1), (fp, 0, 1), (fn_, 1, 0), (tn, 0, 0)] {
            y.extend(std::iter::repeat(t).take(n));
            p.extend(std::iter::repeat(q).take(n));
        }
        (y, p)
    }

    #[test]
    fn binary_formulas() {
        let (y, p) = binary(8, 2, 1, 9);
        let m = Metrics::compute(&y, &p, &vec![0.5; 20], 2).unwrap();
        assert_eq!(m.accuracy, 0.85);
        assert_eq!(m.precision, Some(0.8));
        assert!((m.recall.unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(m.binary, Some(BinaryCounts { tp: 8, fp: 2, tn: 9, fn_: 1 }));
        assert_eq!(m.mean_correct_probability, 0.5);
    }

    #[test]
    fn perfect_predictor() {
        let y = vec![0, 1, 2, 3, 1, 2];
        let m = Metrics::compute(&y, &y, &[1.0; 6], 4).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.mean_correct_probability), (1.0, Some(1.0), Some(1.0), 1.0));
        for p in 0..4 {
            for t in 0..4 {
                assert_eq!(m.confusion[p][t], if p == t { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn no_predicted_positives_is_undefined() {
        let m = Metrics::compute(&[0, 1, 1], &[0, 0, 0], &[1.0; 3], 2).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        let mut buf = Vec::new();
        m.write_csv(&mut buf, &["Normal", "Attack"]).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("precision,undefined"));
    }

    #[test]
    fn uniform_probabilities() {
        let probs = vec![vec![0.5, 0.5]; 6];
        let m = Metrics::from_probabilities(&[0, 1, 0, 1, 1, 0], &probs, 2).unwrap();
        assert_eq!(m.mean_correct_probability, 0.5);
    }

    #[test]
    fn confusion_columns_are_rates_per_true_class() {
        let m = Metrics::compute(&[0, 0, 0, 1, 2, 2], &[0, 1, 1, 1, 2, 0], &[0.3; 6], 3).unwrap();
        for t in 0..3 {
            let s: f64 = (0..3).map(|p| m.confusion[p][t]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.confusion[1][0], 2.0 / 3.0);
    }

    #[test]
    fn argmax_tie_takes_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn bad_inputs() {
        assert!(Metrics::compute(&[], &[], &[], 2).is_err());
        assert!(matches!(Metrics::compute(&[0, 5], &[0, 1], &[1.0, 1.0], 2), Err(Error::Label(_))));
        assert!(Metrics::compute(&[0, 1], &[0], &[1.0, 1.0], 2).is_err());
    }
}
