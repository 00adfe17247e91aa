use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::nn::tensor::{Real, Tensor};

/// A trainable tensor together with its gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<F> {
    pub name: String,
    pub value: Tensor<F>,
    pub grad: Tensor<F>,
}

impl<F: Real> Param<F> {
    pub fn new(name: impl Into<String>, value: Tensor<F>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }

    pub fn cast<G: Real>(&self) -> Param<G> {
        Param {
            name: self.name.clone(),
            value: self.value.cast(),
            grad: self.grad.cast(),
        }
    }
}

/// Checks that parameter names are unique.
pub fn ensure_unique_names<'a, F: 'a>(params: impl IntoIterator<Item = &'a Param<F>>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for p in params {
        if !seen.insert(p.name.as_str()) {
            return Err(Error::Config(format!("duplicate parameter name `{}`", p.name)));
        }
    }
    Ok(())
}
