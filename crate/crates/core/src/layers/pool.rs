//! Max pooling with floor output size; trailing rows/cols that do not fill
//! a window are dropped. Ties go to the first (lowest linear index) maximum
//! so backward routing is deterministic.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{conv_output_len, Tensor};

pub(super) fn forward<T: Scalar>(
    input: &Tensor<T>,
    kernel: usize,
    stride: usize,
) -> Result<(Tensor<T>, Vec<usize>)> {
    if input.rank() != 4 {
        return Err(Error::Dimension(format!(
            "pool input must be [N,C,H,W], got {:?}",
            input.shape()
        )));
    }
    let (n, c, h, w) = (
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    );
    let ho = conv_output_len(h, kernel, stride, 0)?;
    let wo = conv_output_len(w, kernel, stride, 0)?;
    let mut out = Tensor::zeros(&[n, c, ho, wo]);
    let mut argmax = vec![0usize; n * c * ho * wo];
    let data = input.data();
    let mut oidx = 0;
    for item in 0..n {
        for ch in 0..c {
            let base = (item * c + ch) * h * w;
            for oi in 0..ho {
                for oj in 0..wo {
                    let i0 = oi * stride;
                    let j0 = oj * stride;
                    let mut best = base + i0 * w + j0;
                    let mut best_v = data[best];
                    for ki in 0..kernel {
                        let row = base + (i0 + ki) * w + j0;
                        for kj in 0..kernel {
                            let v = data[row + kj];
                            if v > best_v {
                                best_v = v;
                                best = row + kj;
                            }
                        }
                    }
                    out.data_mut()[oidx] = best_v;
                    argmax[oidx] = best;
                    oidx += 1;
                }
            }
        }
    }
    Ok((out, argmax))
}

pub(super) fn backward<T: Scalar>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_output: &Tensor<T>,
) -> Tensor<T> {
    let mut grad_input = Tensor::zeros(input_shape);
    let gx = grad_input.data_mut();
    for (&src, &g) in argmax.iter().zip(grad_output.data()) {
        gx[src] += g;
    }
    grad_input
}
