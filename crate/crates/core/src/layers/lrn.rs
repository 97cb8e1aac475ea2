//! Across-channel local response normalization:
//! y_c = x_c / (k + (alpha/n) * sum over the channel window of x^2)^beta.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn shape4<T: Scalar>(input: &Tensor<T>) -> Result<(usize, usize, usize)> {
    if input.rank() != 4 {
        return Err(Error::Dimension(format!(
            "lrn input must be [N,C,H,W], got {:?}",
            input.shape()
        )));
    }
    Ok((
        input.shape()[0],
        input.shape()[1],
        input.shape()[2] * input.shape()[3],
    ))
}

/// Returns the output and the per-element denominator base
/// d = k + (alpha/n) * window sum, cached for backward.
pub(super) fn forward<T: Scalar>(
    input: &Tensor<T>,
    local_size: usize,
    alpha: f64,
    beta: f64,
    k: f64,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, c, spatial) = shape4(input)?;
    let half = (local_size - 1) / 2;
    let alpha_n = T::of_f64(alpha / local_size as f64);
    let k_t = T::of_f64(k);
    let neg_beta = T::of_f64(-beta);
    let mut out = Tensor::zeros(input.shape());
    let mut denom = Tensor::zeros(input.shape());
    let x = input.data();
    for item in 0..n {
        let base = item * c * spatial;
        for pos in 0..spatial {
            for ch in 0..c {
                let lo = ch.saturating_sub(half);
                let hi = (ch + half).min(c - 1);
                let mut sum = T::zero();
                for cc in lo..=hi {
                    let v = x[base + cc * spatial + pos];
                    sum += v * v;
                }
                let d = k_t + alpha_n * sum;
                let idx = base + ch * spatial + pos;
                denom.data_mut()[idx] = d;
                out.data_mut()[idx] = x[idx] * d.powf(neg_beta);
            }
        }
    }
    Ok((out, denom))
}

pub(super) fn backward<T: Scalar>(
    input: &Tensor<T>,
    denom: &Tensor<T>,
    grad_output: &Tensor<T>,
    local_size: usize,
    alpha: f64,
    beta: f64,
    _k: f64,
) -> Result<Tensor<T>> {
    let (n, c, spatial) = shape4(input)?;
    if grad_output.shape() != input.shape() {
        return Err(Error::Dimension(format!(
            "lrn grad_output shape {:?} vs input {:?}",
            grad_output.shape(),
            input.shape()
        )));
    }
    let half = (local_size - 1) / 2;
    let neg_beta = T::of_f64(-beta);
    let neg_beta_m1 = T::of_f64(-beta - 1.0);
    // d y_c / d x_j = delta_cj * d_c^-beta - (2*alpha*beta/n) * x_j * x_c * d_c^(-beta-1)
    // for j in the window of c; the window relation is symmetric.
    let coef = T::of_f64(2.0 * alpha * beta / local_size as f64);
    let x = input.data();
    let g = grad_output.data();
    let d = denom.data();
    let mut grad_input = Tensor::zeros(input.shape());
    let gi = grad_input.data_mut();
    let mut s = vec![T::zero(); c];
    for item in 0..n {
        let base = item * c * spatial;
        for pos in 0..spatial {
            for (ch, sv) in s.iter_mut().enumerate() {
                let idx = base + ch * spatial + pos;
                *sv = g[idx] * x[idx] * d[idx].powf(neg_beta_m1);
            }
            for ch in 0..c {
                let lo = ch.saturating_sub(half);
                let hi = (ch + half).min(c - 1);
                let mut cross = T::zero();
                for sv in &s[lo..=hi] {
                    cross += *sv;
                }
                let idx = base + ch * spatial + pos;
                gi[idx] = g[idx] * d[idx].powf(neg_beta) - coef * x[idx] * cross;
            }
        }
    }
    Ok(grad_input)
}
