//! Inverted dropout: units are zeroed with probability `rate` at train time
//! and survivors scaled by 1/(1-rate), so the eval pass is a plain identity.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand_chacha::ChaCha8Rng;

use super::Mode;

/// Returns the output and, in train mode, the multiplier mask (0 or the
/// survivor scale) that backward reapplies.
pub(super) fn forward<T: Scalar>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Tensor<T>, Option<Tensor<T>>)> {
    if mode == Mode::Eval {
        return Ok((input.clone(), None));
    }
    let rng = rng.ok_or_else(|| {
        Error::Contract("dropout in train mode requires an rng".into())
    })?;
    let rate_t = T::of_f64(rate);
    let scale = T::of_f64(1.0 / (1.0 - rate));
    let mut mask = Tensor::zeros(input.shape());
    for m in mask.data_mut().iter_mut() {
        let u = T::uniform01(rng);
        *m = if u < rate_t { T::zero() } else { scale };
    }
    let mut out = input.clone();
    for (o, &m) in out.data_mut().iter_mut().zip(mask.data()) {
        *o *= m;
    }
    Ok((out, Some(mask)))
}
