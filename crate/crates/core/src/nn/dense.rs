use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::init::glorot_uniform;
use crate::nn::param::Param;
use crate::nn::tensor::{affine, affine_transpose_acc, outer_acc, Real, Tensor};

/// Probability floor applied before taking the log in the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

/// Fully connected output layer producing class logits.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<F> {
    pub weight: Param<F>,
    pub bias: Param<F>,
}

impl<F: Real> Dense<F> {
    pub fn new<R: Rng>(inputs: usize, classes: usize, rng: &mut R) -> Self {
        Self {
            weight: Param::new("dense.weight", glorot_uniform(&[classes, inputs], inputs, classes, rng)),
            bias: Param::new("dense.bias", Tensor::zeros(&[classes])),
        }
    }

    pub fn from_parts(weight: Tensor<F>, bias: Tensor<F>) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::shape("dense", "bias length must equal output rows"));
        }
        Ok(Self {
            weight: Param::new("dense.weight", weight),
            bias: Param::new("dense.bias", bias),
        })
    }

    pub fn classes(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn logits(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.inputs() {
            return Err(Error::shape("dense", format!("input {} != {}", x.len(), self.inputs())));
        }
        let mut out = vec![F::zero(); self.classes()];
        affine(self.weight.value.data(), x, Some(self.bias.value.data()), &mut out);
        Ok(out)
    }

    /// Accumulates parameter gradients for `dlogits`; returns the input gradient.
    pub fn backward(&mut self, x: &[F], dlogits: &[F]) -> Vec<F> {
        outer_acc(self.weight.grad.data_mut(), dlogits, x);
        for (b, d) in self.bias.grad.data_mut().iter_mut().zip(dlogits) {
            *b += *d;
        }
        let mut gx = vec![F::zero(); x.len()];
        affine_transpose_acc(self.weight.value.data(), dlogits, &mut gx);
        gx
    }

    pub fn params(&self) -> Vec<&Param<F>> {
        vec![&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Dense layer followed by softmax.
pub fn dense_softmax<F: Real>(x: &[F], layer: &Dense<F>) -> Result<Vec<F>> {
    if layer.classes() < 2 {
        return Err(Error::shape("dense_softmax", "need at least two classes"));
    }
    Ok(softmax(&layer.logits(x)?))
}

/// `-ln(max(p[target], 1e-12))` and the logit gradient `p - onehot(target)`.
pub fn cross_entropy<F: Real>(probs: &[F], target: usize) -> Result<(F, Vec<F>)> {
    if target >= probs.len() {
        return Err(Error::Config(format!(
            "target class {target} out of range for {} classes",
            probs.len()
        )));
    }
    let p = probs[target].max(F::from_f64(PROB_FLOOR));
    let mut grad = probs.to_vec();
    grad[target] -= F::one();
    Ok((-p.ln(), grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_logits_are_uniform() {
        let layer = Dense::<f64>::from_parts(Tensor::zeros(&[2, 3]), Tensor::zeros(&[2])).unwrap();
        let p = dense_softmax(&[1.0, 2.0, 3.0], &layer).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn shift_invariance() {
        let a = softmax(&[0.3f64, -1.2, 2.5]);
        let b = softmax(&[100.3f64, 98.8, 102.5]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn two_logit_reference_values() {
        let p = softmax(&[1.0f64, 2.0]);
        assert!((p[0] - 0.26894).abs() < 1e-5);
        assert!((p[1] - 0.73106).abs() < 1e-5);
    }

    #[test]
    fn no_overflow_for_huge_logits() {
        let p = softmax(&[1e30f32, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn cross_entropy_values() {
        let (l, _) = cross_entropy(&[0.0f64, 1.0], 1).unwrap();
        assert_eq!(l, 0.0);
        let (l, g) = cross_entropy(&[0.5f64, 0.5], 0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-6);
        assert_eq!(g, vec![-0.5, 0.5]);
        let (l, _) = cross_entropy(&[1.0f64, 0.0], 1).unwrap();
        assert!((l - (1e12f64).ln()).abs() < 1e-9);
        assert!(cross_entropy(&[0.5f64, 0.5], 2).is_err());
    }
}
