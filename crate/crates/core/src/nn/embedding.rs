use crate::error::{Error, Result};
use crate::nn::param::Param;
use crate::nn::tensor::{Real, Tensor};

/// Trainable lookup table mapping token indices to dense rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding<F> {
    pub table: Param<F>,
}

impl<F: Real> Embedding<F> {
    pub fn new(table: Tensor<F>) -> Result<Self> {
        if table.shape().len() != 2 {
            return Err(Error::shape("embedding", "table must be V×d"));
        }
        Ok(Self {
            table: Param::new("embedding", table),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.table.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.value.cols()
    }

    /// Gathers `indices` rows into a `[T, d]` tensor.
    pub fn forward(&self, indices: &[usize]) -> Result<Tensor<F>> {
        let v = self.vocab_size();
        let d = self.dim();
        if indices.is_empty() {
            return Err(Error::shape("embedding", "empty index sequence"));
        }
        let mut data = Vec::with_capacity(indices.len() * d);
        for (position, &index) in indices.iter().enumerate() {
            if index >= v {
                return Err(Error::IndexOutOfRange {
                    position,
                    index,
                    len: v,
                });
            }
            data.extend_from_slice(self.table.value.row(index));
        }
        Tensor::from_vec(&[indices.len(), d], data)
    }

    /// Scatters `grad_out` rows back onto the selected table rows.
    pub fn backward(&mut self, indices: &[usize], grad_out: &Tensor<F>) {
        for (t, &index) in indices.iter().enumerate() {
            let g = grad_out.row(t);
            for (acc, &gv) in self.table.grad.row_mut(index).iter_mut().zip(g) {
                *acc += gv;
            }
        }
    }

    /// Zeroes the gradient of one row, keeping it fixed under any optimizer step
    /// whose update is proportional to accumulated gradient moments.
    pub fn freeze_row_grad(&mut self, row: usize) {
        self.table.grad.row_mut(row).fill(F::zero());
    }
}
