use rand::Rng;

use crate::nn::tensor::{Real, Tensor};

/// Uniform initialisation in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<F: Real, R: Rng>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<F> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(shape, limit, rng)
}

/// I.i.d. uniform entries in `[-limit, limit]`.
pub fn uniform<F: Real, R: Rng>(shape: &[usize], limit: f64, rng: &mut R) -> Tensor<F> {
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| F::from_f64(rng.random_range(-limit..=limit)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape and data length agree")
}
