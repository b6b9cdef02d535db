use super::config::LossKind;
use crate::error::{Error, Result};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(Error::Label(format!("label {label} outside {classes} classes")));
    }
    Ok(())
}

/// `-mean log p[true]` over rows of probabilities.
pub fn nll(probabilities: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(Error::dimension("nll labels", probabilities.len(), labels.len()));
    }
    let mut total = 0.0;
    for (p, &y) in probabilities.iter().zip(labels) {
        check_label(y, p.len())?;
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Numeric(format!("probability row sums to {sum}")));
        }
        total -= p[y].ln();
    }
    Ok(total / labels.len().max(1) as f64)
}

/// Log-sum-exp cross entropy from logits.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if logits.len() != labels.len() {
        return Err(Error::dimension("cross entropy labels", logits.len(), labels.len()));
    }
    let mut total = 0.0;
    for (z, &y) in logits.iter().zip(labels) {
        check_label(y, z.len())?;
        total -= log_softmax(z)[y];
    }
    Ok(total / labels.len().max(1) as f64)
}

/// Loss of one sample from its logits, and `d loss / d logits` written into `grad`.
///
/// Both kinds have the softmax-minus-one-hot gradient; they differ only in
/// how the scalar is evaluated.
pub fn sample_loss(kind: LossKind, logits: &[f64], label: usize, grad: &mut [f64]) -> Result<f64> {
    check_label(label, logits.len())?;
    let p = softmax(logits);
    for (g, (i, pi)) in grad.iter_mut().zip(p.iter().enumerate()) {
        *g = pi - if i == label { 1.0 } else { 0.0 };
    }
    Ok(match kind {
        LossKind::CrossEntropy => -log_softmax(logits)[label],
        LossKind::Nll => -p[label].max(f64::MIN_POSITIVE).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[1000.0, 0.0, -1000.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn reference_losses() {
        assert_eq!(nll(&[vec![1.0, 0.0]], &[0]).unwrap(), 0.0);
        assert!((nll(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0, 1]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let l = nll(&[vec![0.25, 0.75]], &[0]).unwrap();
        assert!((l - 1.386294).abs() < 1e-6, "{l}");
        assert!(nll(&[vec![0.5, 0.5]], &[2]).is_err());
    }

    #[test]
    fn nll_and_cross_entropy_agree() {
        let z = vec![vec![0.3, -1.2, 2.0, 0.0], vec![5.0, 4.0, -3.0, 0.5]];
        let p: Vec<Vec<f64>> = z.iter().map(|r| softmax(r)).collect();
        let a = nll(&p, &[2, 1]).unwrap();
        let b = cross_entropy(&z, &[2, 1]).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn sample_gradient_is_softmax_minus_onehot() {
        let mut g = [0.0; 2];
        let l = sample_loss(LossKind::Nll, &[0.0, 0.0], 1, &mut g).unwrap();
        assert_eq!(g, [0.5, -0.5]);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
