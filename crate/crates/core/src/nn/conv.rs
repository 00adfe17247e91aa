use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::init::glorot_uniform;
use crate::nn::param::Param;
use crate::nn::tensor::{affine, Real, Tensor};

/// Valid 1-D convolution over time followed by a global max-pool per filter.
///
/// Each filter is stored as one row of `weight` covering a `width × d` window, so a
/// window of the row-major input is a contiguous slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1dMaxPool<F> {
    pub weight: Param<F>,
    pub bias: Param<F>,
    pub width: usize,
    pub input_dim: usize,
}

/// Argmax time step per filter, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ConvCache {
    argmax: Vec<usize>,
}

impl<F: Real> Conv1dMaxPool<F> {
    pub fn new<R: Rng>(filters: usize, width: usize, input_dim: usize, rng: &mut R) -> Self {
        let fan_in = width * input_dim;
        Self {
            weight: Param::new(
                "conv.weight",
                glorot_uniform(&[filters, fan_in], fan_in, filters, rng),
            ),
            bias: Param::new("conv.bias", Tensor::zeros(&[filters])),
            width,
            input_dim,
        }
    }

    pub fn from_parts(weight: Tensor<F>, bias: Tensor<F>, width: usize) -> Result<Self> {
        let filters = weight.rows();
        if bias.len() != filters || !weight.cols().is_multiple_of(width) {
            return Err(Error::shape("conv1d", "filter bank / bias / width disagree"));
        }
        let input_dim = weight.cols() / width;
        Ok(Self {
            weight: Param::new("conv.weight", weight),
            bias: Param::new("conv.bias", bias),
            width,
            input_dim,
        })
    }

    pub fn filters(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<(Tensor<F>, ConvCache)> {
        let (steps, d) = (x.rows(), x.cols());
        if d != self.input_dim {
            return Err(Error::shape("conv1d", format!("input width {d} != {}", self.input_dim)));
        }
        if steps < self.width {
            return Err(Error::shape(
                "conv1d",
                format!("sequence length {steps} shorter than kernel width {}", self.width),
            ));
        }
        let nf = self.filters();
        let mut best = vec![F::neg_infinity(); nf];
        let mut argmax = vec![0usize; nf];
        let mut scratch = vec![F::zero(); nf];
        let span = self.width * d;
        for t in 0..=steps - self.width {
            let window = &x.data()[t * d..t * d + span];
            affine(self.weight.value.data(), window, Some(self.bias.value.data()), &mut scratch);
            for f in 0..nf {
                if scratch[f] > best[f] {
                    best[f] = scratch[f];
                    argmax[f] = t;
                }
            }
        }
        Ok((Tensor::from_vec(&[nf], best)?, ConvCache { argmax }))
    }

    /// Routes `grad_out` to the argmax windows only; returns the input gradient.
    pub fn backward(&mut self, x: &Tensor<F>, cache: &ConvCache, grad_out: &[F]) -> Tensor<F> {
        let d = x.cols();
        let span = self.width * d;
        let mut gx = Tensor::zeros(x.shape());
        for (f, (&g, &t)) in grad_out.iter().zip(&cache.argmax).enumerate() {
            if g == F::zero() {
                continue;
            }
            let window = &x.data()[t * d..t * d + span];
            let w_row = self.weight.value.row(f);
            for (acc, &xv) in self.weight.grad.row_mut(f).iter_mut().zip(window) {
                *acc += g * xv;
            }
            self.bias.grad.data_mut()[f] += g;
            for (acc, &wv) in gx.data_mut()[t * d..t * d + span].iter_mut().zip(w_row) {
                *acc += g * wv;
            }
        }
        gx
    }

    pub fn params(&self) -> Vec<&Param<F>> {
        vec![&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
