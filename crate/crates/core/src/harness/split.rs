use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train / validation / test fractions and the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.4, validation: 0.3, test: 0.3, seed: 0 }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("train", self.train), ("validation", self.validation), ("test", self.test)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::config(format!("split.{name}"), format!("fraction {f} outside [0,1]")));
            }
        }
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("split", format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Part sizes for `n` rows: floors for train and validation, the rest to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let cut = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
        let a = cut(self.train).min(n);
        let b = cut(self.validation).min(n - a);
        (a, b, n - a - b)
    }
}

/// Row indices of each part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle and contiguous cut of `labels.len()` rows.
///
/// If a part misses a class that occurs in the data, the rows are split again
/// per class with a derived seed so that every part sees every class.
pub fn split(labels: &[usize], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if labels.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    let classes: BTreeSet<usize> = labels.iter().copied().collect();
    if classes.len() < 2 {
        return Err(Error::Data(format!("need at least two classes to split, found {}", classes.len())));
    }
    if labels.len() < classes.len() {
        return Err(Error::Data(format!("{} rows for {} classes", labels.len(), classes.len())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng);
    let (a, b, _) = spec.sizes(order.len());
    let out = Split {
        train: order[..a].to_vec(),
        validation: order[a..a + b].to_vec(),
        test: order[a + b..].to_vec(),
    };
    if covers(&out, labels, &classes) {
        return Ok(out);
    }
    log::warn!("random split left a class out of a part; falling back to a stratified split");
    stratified(labels, &classes, spec)
}

fn covers(s: &Split, labels: &[usize], classes: &BTreeSet<usize>) -> bool {
    [&s.train, &s.validation, &s.test]
        .iter()
        .all(|part| part.iter().map(|&i| labels[i]).collect::<BTreeSet<_>>() == *classes)
}

fn stratified(labels: &[usize], classes: &BTreeSet<usize>, spec: &SplitSpec) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5354_5241_5446_4959);
    let mut out = Split { train: Vec::new(), validation: Vec::new(), test: Vec::new() };
    for &c in classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if rows.len() < 3 {
            return Err(Error::Data(format!(
                "class {c} has {} rows; every part needs at least one",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        let (a, b, _) = spec.sizes(rows.len());
        let a = a.max(1);
        let b = b.max(1).min(rows.len() - a - 1);
        out.train.extend_from_slice(&rows[..a]);
        out.validation.extend_from_slice(&rows[a..a + b]);
        out.test.extend_from_slice(&rows[a + b..]);
    }
    out.train.shuffle(&mut rng);
    out.validation.shuffle(&mut rng);
    out.test.shuffle(&mut rng);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_rows_split_four_three_three() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let s = split(&labels, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (4, 3, 3));
    }

    #[test]
    fn same_seed_same_partition() {
        let labels: Vec<usize> = (0..100).map(|i| i % 3).collect();
        let spec = SplitSpec::with_seed(5);
        assert_eq!(split(&labels, &spec).unwrap(), split(&labels, &spec).unwrap());
        assert_ne!(split(&labels, &spec).unwrap(), split(&labels, &SplitSpec::with_seed(6)).unwrap());
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(split(&[1, 1, 1, 1], &SplitSpec::default()), Err(Error::Data(_))));
        assert!(split(&[], &SplitSpec::default()).is_err());
    }

    #[test]
    fn rare_class_triggers_stratification() {
        let mut labels = vec![0; 97];
        labels.extend([1, 1, 1]);
        for seed in 0..20 {
            let s = split(&labels, &SplitSpec::with_seed(seed)).unwrap();
            for part in [&s.train, &s.validation, &s.test] {
                assert!(part.iter().any(|&i| labels[i] == 1));
            }
        }
        let mut too_rare = vec![0; 20];
        too_rare.push(1);
        let err = (0..50).find_map(|seed| split(&too_rare, &SplitSpec::with_seed(seed)).err());
        assert!(matches!(err, Some(Error::Data(_))));
    }

    #[test]
    fn bad_fractions() {
        let spec = SplitSpec { train: 0.5, validation: 0.3, test: 0.3, seed: 0 };
        assert!(matches!(split(&[0, 1, 0], &spec), Err(Error::Config { .. })));
    }

    proptest! {
        #[test]
        fn split_is_a_partition(labels in proptest::collection::vec(0usize..3, 10..300), seed: u64) {
            prop_assume!(labels.iter().collect::<BTreeSet<_>>().len() >= 2);
            if let Ok(s) = split(&labels, &SplitSpec::with_seed(seed)) {
                let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
                prop_assert_eq!(all.len(), labels.len());
                all.sort_unstable();
                all.dedup();
                prop_assert_eq!(all.len(), labels.len());
            }
        }
    }
}
