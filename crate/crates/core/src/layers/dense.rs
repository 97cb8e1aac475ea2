//! Fully connected layer: out = flatten(input) · W + b, with W as
//! [in_features, units]. Inputs of rank > 2 are flattened past the batch
//! dimension (the buffer is already contiguous, so this is free).

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemm_a_bt, gemm_at_b, gemm_nn, Tensor};

pub(super) fn forward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    if input.rank() < 2 {
        return Err(Error::Dimension(format!(
            "fully connected input needs a batch dim, got {:?}",
            input.shape()
        )));
    }
    let n = input.shape()[0];
    let features = input.len() / n;
    let (d, u) = (weight.shape()[0], weight.shape()[1]);
    if features != d {
        return Err(Error::Dimension(format!(
            "fully connected input has {} features, weight expects {}",
            features, d
        )));
    }
    if bias.len() != u {
        return Err(Error::Dimension(format!(
            "fully connected bias has {} entries, expected {}",
            bias.len(),
            u
        )));
    }
    let mut out = Tensor::zeros(&[n, u]);
    gemm_nn(input.data(), weight.data(), n, d, u, out.data_mut());
    for row in 0..n {
        let o = &mut out.data_mut()[row * u..(row + 1) * u];
        for (v, &b) in o.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    Ok(out)
}

/// `input` must already be the flattened [N, features] tensor from the cache.
pub(super) fn backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_output: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, d) = (input.shape()[0], input.shape()[1]);
    let u = weight.shape()[1];
    if grad_output.shape() != [n, u] {
        return Err(Error::Dimension(format!(
            "fully connected grad_output shape {:?}, expected {:?}",
            grad_output.shape(),
            [n, u]
        )));
    }
    let mut grad_weight = Tensor::zeros(weight.shape());
    gemm_at_b(
        input.data(),
        grad_output.data(),
        n,
        d,
        u,
        grad_weight.data_mut(),
    );
    let mut grad_bias = Tensor::zeros(&[u]);
    for row in 0..n {
        let g = &grad_output.data()[row * u..(row + 1) * u];
        for (b, &gv) in grad_bias.data_mut().iter_mut().zip(g) {
            *b += gv;
        }
    }
    let mut grad_input = Tensor::zeros(&[n, d]);
    gemm_a_bt(
        grad_output.data(),
        weight.data(),
        n,
        u,
        d,
        grad_input.data_mut(),
    );
    Ok((grad_input, grad_weight, grad_bias))
}
