use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating point element type for tensors. Training runs in `f32`,
/// gradient verification in `f64`.
pub trait Real:
    Float + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
}

/// Dense row-major n-dimensional array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![F::zero(); len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<F>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) {
            return Err(Error::shape("tensor", format!("zero-sized dimension in {shape:?}")));
        }
        if expected != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {shape:?} needs {expected} values, got {}", data.len()),
            ));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }

    /// Number of rows when viewed as a matrix (first dimension).
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Row width when viewed as a matrix (product of trailing dimensions).
    pub fn cols(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn row(&self, i: usize) -> &[F] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn fill(&mut self, value: F) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    /// Fails with [`Error::NonFinite`] if any element is NaN or infinite.
    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::NonFinite(format!(
                "{context} (element {i} = {})",
                self.data[i]
            ))),
        }
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| G::from_f64(x.as_f64())).collect(),
        }
    }
}

/// `out = W x + b` for `W` of shape `[rows, cols]`.
pub(crate) fn affine<F: Real>(w: &[F], x: &[F], b: Option<&[F]>, out: &mut [F]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), out.len() * cols);
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b.map_or(F::zero(), |b| b[r]);
        for (a, v) in row.iter().zip(x) {
            acc += *a * *v;
        }
        *o = acc;
    }
}

/// `out += Wᵀ g` for `W` of shape `[g.len(), out.len()]`.
pub(crate) fn affine_transpose_acc<F: Real>(w: &[F], g: &[F], out: &mut [F]) {
    let cols = out.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == F::zero() {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += *a * gr;
        }
    }
}

/// `gw += g ⊗ x` for a weight matrix of shape `[g.len(), x.len()]`.
pub(crate) fn outer_acc<F: Real>(gw: &mut [F], g: &[F], x: &[F]) {
    let cols = x.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == F::zero() {
            continue;
        }
        let row = &mut gw[r * cols..(r + 1) * cols];
        for (o, v) in row.iter_mut().zip(x) {
            *o += gr * *v;
        }
    }
}

pub(crate) fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_product_must_match_data() {
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
        let t = Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 6]).unwrap();
        assert_eq!(t.rows(), 2);
        assert_eq!(t.cols(), 3);
    }

    #[test]
    fn non_finite_is_reported() {
        let t = Tensor::<f64>::from_vec(&[3], vec![1.0, f64::NAN, 0.0]).unwrap();
        let err = t.ensure_finite("probe").unwrap_err().to_string();
        assert!(err.contains("probe") && err.contains("element 1"), "{err}");
    }

    #[test]
    fn affine_and_transpose_agree_with_hand_values() {
        // W = [[1,2],[3,4],[5,6]]
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut y = [0.0; 3];
        affine(&w, &[1.0, -1.0], Some(&[0.5, 0.5, 0.5]), &mut y);
        assert_eq!(y, [-0.5, -0.5, -0.5]);
        let mut gx = [0.0; 2];
        affine_transpose_acc(&w, &[1.0, 0.0, 1.0], &mut gx);
        assert_eq!(gx, [6.0, 8.0]);
    }
}
