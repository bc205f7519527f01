//! Parameter initialization schemes.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::rng::SeedRng;
use super::tensor::Tensor2;

/// `Xavier` draws uniform in ±1/√n_in (n_in = the input dimension, i.e. the
/// column count of a weight applied as W·x). `AttentionSmall` draws
/// 0.001·N(0,1); the embedding projections need low initial magnitude so the
/// selection softmax does not spike early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    Xavier,
    AttentionSmall,
}

pub const ATTENTION_INIT_SCALE: f64 = 0.001;

pub fn init_params<S: Scalar>(
    rows: usize,
    cols: usize,
    scheme: InitScheme,
    rng: &mut SeedRng,
) -> Result<Tensor2<S>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig(format!(
            "init dims must be positive, got {}x{}",
            rows, cols
        )));
    }
    let mut draw: Box<dyn FnMut() -> f64> = match scheme {
        InitScheme::Xavier => {
            let bound = 1.0 / (cols as f64).sqrt();
            Box::new(move || rng.uniform(-bound, bound))
        }
        InitScheme::AttentionSmall => {
            Box::new(move || ATTENTION_INIT_SCALE * rng.standard_normal())
        }
    };
    Ok(Tensor2::from_fn(rows, cols, |_, _| S::from_f64(draw())))
}
