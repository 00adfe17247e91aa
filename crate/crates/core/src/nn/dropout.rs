use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout. In train mode each element is zeroed with probability `rate`
/// and survivors are scaled by `1 / (1 - rate)`; eval mode is the identity.
///
/// Returns the output and the per-element multiplier (for the backward pass);
/// the multiplier is `None` whenever the output is an unchanged copy.
pub fn dropout<F: Real, R: Rng + ?Sized>(
    x: &Tensor<F>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor<F>, Option<Vec<F>>)> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let scale = F::from_f64(1.0 / (1.0 - rate));
    let mask: Vec<F> = (0..x.len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                F::zero()
            } else {
                scale
            }
        })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(v, m)| *v * *m).collect();
    Ok((Tensor::from_vec(x.shape(), data)?, Some(mask)))
}

pub fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Applies a stored mask to a gradient in place.
pub fn apply_mask<F: Real>(grad: &mut [F], mask: Option<&[F]>) {
    if let Some(mask) = mask {
        for (g, m) in grad.iter_mut().zip(mask) {
            *g *= *m;
        }
    }
}
