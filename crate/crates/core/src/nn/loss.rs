use crate::error::{Error, Result};

use super::ops::sigmoid;
use super::tensor::{Scalar, Tensor};

pub const PROB_CLAMP: f64 = 1e-7;

/// Mean softmax cross-entropy over rows of `logits` (one column per class).
/// Returns the loss and `∂L/∂logits`.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, targets: &[usize]) -> Result<(T, Tensor<T>)> {
    let (n, c) = (logits.rows(), logits.cols());
    if n == 0 {
        return Err(Error::Training("cross-entropy over an empty batch".into()));
    }
    if targets.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", targets.len())));
    }
    let inv_n = T::one() / T::from_f64(n as f64);
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(logits.shape());
    for (r, &y) in targets.iter().enumerate() {
        if y >= c {
            return Err(Error::Shape(format!("target class {y} with {c} logits")));
        }
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum_exp: T = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss = loss + (log_z - row[y]);
        let g = grad.row_mut(r);
        for (k, gk) in g.iter_mut().enumerate() {
            let p = (row[k] - log_z).exp();
            let indicator = if k == y { T::one() } else { T::zero() };
            *gk = (p - indicator) * inv_n;
        }
    }
    Ok((loss * inv_n, grad))
}

/// Mean binary cross-entropy on probabilities clamped to `[1e-7, 1 - 1e-7]`.
/// The gradient is zero where the clamp is active.
pub fn binary_cross_entropy<T: Scalar>(probs: &[T], targets: &[T]) -> Result<(T, Vec<T>)> {
    if probs.is_empty() {
        return Err(Error::Training("binary cross-entropy over an empty batch".into()));
    }
    if probs.len() != targets.len() {
        return Err(Error::Shape(format!("{} probabilities for {} targets", probs.len(), targets.len())));
    }
    let (lo, hi) = (T::from_f64(PROB_CLAMP), T::from_f64(1.0 - PROB_CLAMP));
    let inv_n = T::one() / T::from_f64(probs.len() as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.iter().zip(targets) {
        let pc = p.max(lo).min(hi);
        let one = T::one();
        loss = loss - (y * pc.ln() + (one - y) * (one - pc).ln());
        grad.push(if pc != p { T::zero() } else { (p - y) / (p * (one - p)) * inv_n });
    }
    Ok((loss * inv_n, grad))
}

/// Mean binary cross-entropy on logits, `softplus(s) - y s`, computed without
/// forming probabilities. Returns the loss and `∂L/∂s = (σ(s) - y) / n`.
pub fn bce_with_logits<T: Scalar>(scores: &[T], targets: &[T]) -> Result<(T, Vec<T>)> {
    if scores.is_empty() {
        return Err(Error::Training("binary cross-entropy over an empty batch".into()));
    }
    if scores.len() != targets.len() {
        return Err(Error::Shape(format!("{} scores for {} targets", scores.len(), targets.len())));
    }
    let inv_n = T::one() / T::from_f64(scores.len() as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(scores.len());
    for (&s, &y) in scores.iter().zip(targets) {
        let softplus = s.max(T::zero()) + (T::one() + (-s.abs()).exp()).ln();
        loss = loss + softplus - y * s;
        grad.push((sigmoid(s) - y) * inv_n);
    }
    Ok((loss * inv_n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln2() {
        let logits = Tensor::<f64>::matrix(3, 2, vec![0.0; 6]).unwrap();
        for y in 0..2 {
            let (l, _) = cross_entropy(&logits, &[y, y, 1 - y]).unwrap();
            assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        }
        assert!(cross_entropy(&Tensor::<f64>::zeros(&[0, 2]), &[]).is_err());
    }

    #[test]
    fn bce_half_is_ln2() {
        let (l, _) = binary_cross_entropy(&[0.5f64], &[1.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let (l, _) = bce_with_logits(&[0.0f64], &[1.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn clamp_keeps_loss_finite() {
        let (l, g) = binary_cross_entropy(&[0.0f32, 1.0], &[1.0, 0.0]).unwrap();
        assert!(l.is_finite());
        assert_eq!(g, vec![0.0, 0.0]);
        let (l, _) = bce_with_logits(&[-1e4f32, 1e4], &[1.0, 0.0]).unwrap();
        assert!(l.is_finite());
    }
}
