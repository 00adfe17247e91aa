use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::init::glorot_uniform;
use crate::nn::param::Param;
use crate::nn::tensor::{Real, Tensor};
use crate::nn::dense::softmax;

/// Attention pooling over recurrent states:
/// `M = tanh(H)`, `α = softmax(M w)`, `r = Hᵀ α`, output `tanh(r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Attention<F> {
    pub w: Param<F>,
}

#[derive(Clone, Debug)]
pub struct AttentionCache<F> {
    m: Tensor<F>,
    pub alpha: Vec<F>,
    out: Vec<F>,
}

impl<F: Real> Attention<F> {
    pub fn new<R: Rng>(width: usize, rng: &mut R) -> Self {
        Self {
            w: Param::new("attention.w", glorot_uniform(&[width], width, 1, rng)),
        }
    }

    pub fn from_vector(w: Tensor<F>) -> Self {
        Self {
            w: Param::new("attention.w", w),
        }
    }

    pub fn forward(&self, states: &Tensor<F>) -> Result<(Tensor<F>, AttentionCache<F>)> {
        let (steps, n) = (states.rows(), states.cols());
        if steps == 0 {
            return Err(Error::shape("attention", "no time steps"));
        }
        if n != self.w.value.len() {
            return Err(Error::shape(
                "attention",
                format!("state width {n} != attention vector {}", self.w.value.len()),
            ));
        }
        let mut m = states.clone();
        m.data_mut().iter_mut().for_each(|v| *v = v.tanh());
        let w = self.w.value.data();
        let scores: Vec<F> = (0..steps)
            .map(|t| m.row(t).iter().zip(w).map(|(a, b)| *a * *b).sum())
            .collect();
        let alpha = softmax(&scores);
        let mut r = vec![F::zero(); n];
        for (t, &a) in alpha.iter().enumerate() {
            for (acc, &h) in r.iter_mut().zip(states.row(t)) {
                *acc += a * h;
            }
        }
        let out: Vec<F> = r.iter().map(|v| v.tanh()).collect();
        Ok((
            Tensor::from_vec(&[n], out.clone())?,
            AttentionCache { m, alpha, out },
        ))
    }

    /// Returns the gradient with respect to the states and accumulates into `w`.
    pub fn backward(&mut self, states: &Tensor<F>, cache: &AttentionCache<F>, grad_out: &[F]) -> Tensor<F> {
        let steps = states.rows();
        let one = F::one();
        let dr: Vec<F> = grad_out
            .iter()
            .zip(&cache.out)
            .map(|(g, o)| *g * (one - *o * *o))
            .collect();
        let mut dh = Tensor::zeros(states.shape());
        let mut dalpha = vec![F::zero(); steps];
        for t in 0..steps {
            let a = cache.alpha[t];
            let row = states.row(t);
            dalpha[t] = row.iter().zip(&dr).map(|(h, d)| *h * *d).sum();
            for (acc, &d) in dh.row_mut(t).iter_mut().zip(&dr) {
                *acc += a * d;
            }
        }
        let weighted: F = cache.alpha.iter().zip(&dalpha).map(|(a, d)| *a * *d).sum();
        let w = self.w.value.data().to_vec();
        for t in 0..steps {
            let ds = cache.alpha[t] * (dalpha[t] - weighted);
            let m_row = cache.m.row(t);
            for (acc, &mv) in self.w.grad.data_mut().iter_mut().zip(m_row) {
                *acc += ds * mv;
            }
            for ((acc, &mv), &wv) in dh.row_mut(t).iter_mut().zip(m_row).zip(&w) {
                *acc += ds * wv * (one - mv * mv);
            }
        }
        dh
    }

    pub fn params(&self) -> Vec<&Param<F>> {
        vec![&self.w]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.w]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_attends_fully() {
        let att = Attention::from_vector(Tensor::from_vec(&[3], vec![0.3f64, -1.0, 2.0]).unwrap());
        let h = Tensor::from_vec(&[1, 3], vec![0.5f64, -0.2, 1.5]).unwrap();
        let (out, cache) = att.forward(&h).unwrap();
        assert_eq!(cache.alpha, vec![1.0]);
        for (o, x) in out.data().iter().zip(h.data()) {
            assert!((o - x.tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_rows_pool_to_the_row() {
        let att = Attention::from_vector(Tensor::from_vec(&[2], vec![0.7, 0.1]).unwrap());
        let v = [0.4, -0.9];
        let h = Tensor::from_vec(&[4, 2], v.repeat(4)).unwrap();
        let (out, cache) = att.forward(&h).unwrap();
        let total: f64 = cache.alpha.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (o, x) in out.data().iter().zip(v) {
            assert!((o - x.tanh()).abs() < 1e-12);
        }
    }
}
