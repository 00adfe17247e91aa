//! Central finite-difference verification of analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::attention::Attention;
use crate::nn::conv::Conv1dMaxPool;
use crate::nn::dense::{cross_entropy, softmax, Dense};
use crate::nn::embedding::Embedding;
use crate::nn::init::uniform;
use crate::nn::lstm::{Blstm, Direction, Lstm};
use crate::nn::param::Param;
use crate::nn::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-3;

/// A scalar function of some parameters, evaluated in 64-bit.
pub trait Objective {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>>;

    /// Forward evaluation only.
    fn loss(&mut self) -> Result<f64>;

    /// Zeroes gradients, then runs forward and backward, leaving the analytic
    /// gradient in every parameter's `grad`.
    fn loss_and_grad(&mut self) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `name[index]` of the worst element.
    pub worst: String,
    pub elements: usize,
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares every analytic partial derivative against a central difference with
/// the given step and reports the largest relative error.
pub fn grad_check<O: Objective + ?Sized>(objective: &mut O, step: f64) -> Result<GradCheckReport> {
    objective.loss_and_grad()?;
    let analytic: Vec<(String, Vec<f64>)> = objective
        .params_mut()
        .into_iter()
        .map(|p| (p.name.clone(), p.grad.data().to_vec()))
        .collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        elements: 0,
    };
    for (pi, (name, grads)) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let original = objective.params_mut()[pi].value.data()[i];
            objective.params_mut()[pi].value.data_mut()[i] = original + step;
            let plus = objective.loss()?;
            objective.params_mut()[pi].value.data_mut()[i] = original - step;
            let minus = objective.loss()?;
            objective.params_mut()[pi].value.data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(a, numeric);
            report.elements += 1;
            if report.worst.is_empty() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = format!("{name}[{i}]");
            }
        }
    }
    Ok(report)
}

/// Wraps an objective and scales the analytic gradient of one parameter; used to
/// confirm the harness notices a wrong backward pass.
pub struct Corrupted<O> {
    pub inner: O,
    pub param: String,
    pub factor: f64,
}

impl<O: Objective> Objective for Corrupted<O> {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        self.inner.params_mut()
    }

    fn loss(&mut self) -> Result<f64> {
        self.inner.loss()
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        let loss = self.inner.loss_and_grad()?;
        let factor = self.factor;
        for p in self.inner.params_mut() {
            if p.name == self.param {
                p.grad.data_mut().iter_mut().for_each(|g| *g *= factor);
            }
        }
        Ok(loss)
    }
}

fn project(out: &[f64], coeffs: &[f64]) -> f64 {
    out.iter().zip(coeffs).map(|(a, b)| a * b).sum()
}

fn coefficients(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `loss = c · (W x + b)`; exactly linear in every parameter.
pub struct LinearProbe {
    pub layer: Dense<f64>,
    pub input: Param<f64>,
    coeffs: Vec<f64>,
}

impl LinearProbe {
    pub fn new(inputs: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = Dense::new(inputs, outputs, &mut rng);
        let input = Param::new("input", uniform(&[inputs], 1.0, &mut rng));
        let coeffs = coefficients(outputs, &mut rng);
        Self { layer, input, coeffs }
    }
}

impl Objective for LinearProbe {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        let mut p = self.layer.params_mut();
        p.push(&mut self.input);
        p
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(project(&self.layer.logits(self.input.value.data())?, &self.coeffs))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let loss = self.loss()?;
        let gx = self.layer.backward(self.input.value.data(), &self.coeffs);
        self.input.grad.data_mut().copy_from_slice(&gx);
        Ok(loss)
    }
}

/// Softmax followed by cross-entropy on top of a dense layer.
pub struct SoftmaxCrossEntropyProbe {
    pub layer: Dense<f64>,
    pub input: Param<f64>,
    pub target: usize,
}

impl SoftmaxCrossEntropyProbe {
    pub fn new(inputs: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = Dense::new(inputs, classes, &mut rng);
        layer.bias.value = uniform(&[classes], 0.5, &mut rng);
        let input = Param::new("input", uniform(&[inputs], 1.0, &mut rng));
        let target = rng.random_range(0..classes);
        Self { layer, input, target }
    }
}

impl Objective for SoftmaxCrossEntropyProbe {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        let mut p = self.layer.params_mut();
        p.push(&mut self.input);
        p
    }

    fn loss(&mut self) -> Result<f64> {
        let probs = softmax(&self.layer.logits(self.input.value.data())?);
        Ok(cross_entropy(&probs, self.target)?.0)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let probs = softmax(&self.layer.logits(self.input.value.data())?);
        let (loss, dlogits) = cross_entropy(&probs, self.target)?;
        let gx = self.layer.backward(self.input.value.data(), &dlogits);
        self.input.grad.data_mut().copy_from_slice(&gx);
        Ok(loss)
    }
}

/// Projection of gathered embedding rows, with repeated indices.
pub struct EmbeddingProbe {
    pub layer: Embedding<f64>,
    indices: Vec<usize>,
    coeffs: Vec<f64>,
}

impl EmbeddingProbe {
    pub fn new(vocab: usize, dim: usize, steps: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = Embedding::new(uniform(&[vocab, dim], 1.0, &mut rng)).expect("2-D table");
        let mut indices: Vec<usize> = (0..steps).map(|_| rng.random_range(0..vocab)).collect();
        indices[steps - 1] = indices[0];
        let coeffs = coefficients(steps * dim, &mut rng);
        Self { layer, indices, coeffs }
    }
}

impl Objective for EmbeddingProbe {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        vec![&mut self.layer.table]
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(project(self.layer.forward(&self.indices)?.data(), &self.coeffs))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.layer.table.zero_grad();
        let out = self.layer.forward(&self.indices)?;
        let g = Tensor::from_vec(out.shape(), self.coeffs.clone())?;
        self.layer.backward(&self.indices, &g);
        Ok(project(out.data(), &self.coeffs))
    }
}

pub struct ConvProbe {
    pub layer: Conv1dMaxPool<f64>,
    pub input: Param<f64>,
    coeffs: Vec<f64>,
}

impl ConvProbe {
    pub fn new(steps: usize, dim: usize, filters: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = Conv1dMaxPool::new(filters, width, dim, &mut rng);
        layer.bias.value = uniform(&[filters], 0.5, &mut rng);
        let input = Param::new("input", uniform(&[steps, dim], 1.0, &mut rng));
        let coeffs = coefficients(filters, &mut rng);
        Self { layer, input, coeffs }
    }
}

impl Objective for ConvProbe {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        let mut p = self.layer.params_mut();
        p.push(&mut self.input);
        p
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(project(self.layer.forward(&self.input.value)?.0.data(), &self.coeffs))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let (out, cache) = self.layer.forward(&self.input.value)?;
        let x = self.input.value.clone();
        let gx = self.layer.backward(&x, &cache, &self.coeffs);
        self.input.grad = gx;
        Ok(project(out.data(), &self.coeffs))
    }
}

/// `loss = sum(h_T)` where `h_T` is the final state in processing order.
pub struct LstmProbe {
    pub layer: Lstm<f64>,
    pub input: Param<f64>,
}

impl LstmProbe {
    pub fn new(steps: usize, dim: usize, hidden: usize, direction: Direction, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = Lstm::new("lstm", dim, hidden, direction, &mut rng);
        layer.bias.value = uniform(&[4 * hidden], 0.5, &mut rng);
        let input = Param::new("input", uniform(&[steps, dim], 1.0, &mut rng));
        Self { layer, input }
    }

    fn final_row(&self) -> usize {
        match self.layer.direction {
            Direction::Forward => self.input.value.rows() - 1,
            Direction::Backward => 0,
        }
    }
}

impl Objective for LstmProbe {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        let mut p = self.layer.params_mut();
        p.push(&mut self.input);
        p
    }

    fn loss(&mut self) -> Result<f64> {
        let (out, _) = self.layer.forward(&self.input.value)?;
        Ok(out.row(self.final_row()).iter().sum())
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let (out, cache) = self.layer.forward(&self.input.value)?;
        let last = self.final_row();
        let mut g = Tensor::zeros(out.shape());
        g.row_mut(last).fill(1.0);
        let x = self.input.value.clone();
        self.input.grad = self.layer.backward(&x, &out, &cache, &g);
        Ok(out.row(last).iter().sum())
    }
}

pub struct BlstmProbe {
    pub layer: Blstm<f64>,
    pub input: Param<f64>,
    coeffs: Vec<f64>,
}

impl BlstmProbe {
    pub fn new(steps: usize, dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = Blstm::new(dim, hidden, &mut rng);
        let input = Param::new("input", uniform(&[steps, dim], 1.0, &mut rng));
        let coeffs = coefficients(steps * 2 * hidden, &mut rng);
        Self { layer, input, coeffs }
    }
}

impl Objective for BlstmProbe {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        let mut p = self.layer.params_mut();
        p.push(&mut self.input);
        p
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(project(self.layer.forward(&self.input.value)?.0.data(), &self.coeffs))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let (out, cache) = self.layer.forward(&self.input.value)?;
        let g = Tensor::from_vec(out.shape(), self.coeffs.clone())?;
        let x = self.input.value.clone();
        self.input.grad = self.layer.backward(&x, &cache, &g);
        Ok(project(out.data(), &self.coeffs))
    }
}

pub struct AttentionProbe {
    pub layer: Attention<f64>,
    pub states: Param<f64>,
    coeffs: Vec<f64>,
}

impl AttentionProbe {
    pub fn new(steps: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = Attention::from_vector(uniform(&[width], 1.5, &mut rng));
        let states = Param::new("states", uniform(&[steps, width], 1.5, &mut rng));
        let coeffs = coefficients(width, &mut rng);
        Self { layer, states, coeffs }
    }
}

impl Objective for AttentionProbe {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        vec![&mut self.layer.w, &mut self.states]
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(project(self.layer.forward(&self.states.value)?.0.data(), &self.coeffs))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.layer.w.zero_grad();
        let (out, cache) = self.layer.forward(&self.states.value)?;
        let h = self.states.value.clone();
        self.states.grad = self.layer.backward(&h, &cache, &self.coeffs);
        Ok(project(out.data(), &self.coeffs))
    }
}
