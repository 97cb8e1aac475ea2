//! Convolution (cross-correlation, no kernel flip) via im2col + matmul.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{
    col2im_into, conv_output_len, gemm_a_bt, gemm_at_b, gemm_nn, im2col_into, Tensor,
};

struct Dims {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    ho: usize,
    wo: usize,
}

fn dims<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Dims> {
    if input.rank() != 4 {
        return Err(Error::Dimension(format!(
            "conv input must be [N,C,H,W], got {:?}",
            input.shape()
        )));
    }
    if weight.rank() != 4 {
        return Err(Error::Dimension(format!(
            "conv weight must be [OC,C,KH,KW], got {:?}",
            weight.shape()
        )));
    }
    let (n, c, h, w) = (
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    );
    let (oc, wc, kh, kw) = (
        weight.shape()[0],
        weight.shape()[1],
        weight.shape()[2],
        weight.shape()[3],
    );
    if wc != c {
        return Err(Error::Dimension(format!(
            "conv weight expects {} input channels, input has {}",
            wc, c
        )));
    }
    let ho = conv_output_len(h, kh, stride, pad)?;
    let wo = conv_output_len(w, kw, stride, pad)?;
    Ok(Dims {
        n,
        c,
        h,
        w,
        oc,
        kh,
        kw,
        ho,
        wo,
    })
}

pub(super) fn forward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    kernel: (usize, usize),
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>> {
    if weight.rank() == 4 && (weight.shape()[2], weight.shape()[3]) != kernel {
        return Err(Error::Dimension(format!(
            "conv weight kernel {:?} does not match spec kernel {:?}",
            &weight.shape()[2..],
            kernel
        )));
    }
    let d = dims(input, weight, stride, pad)?;
    if bias.len() != d.oc {
        return Err(Error::Dimension(format!(
            "conv bias has {} entries, expected {}",
            bias.len(),
            d.oc
        )));
    }
    let ckk = d.c * d.kh * d.kw;
    let cols_n = d.ho * d.wo;
    let mut out = Tensor::zeros(&[d.n, d.oc, d.ho, d.wo]);
    let mut cols = vec![T::zero(); ckk * cols_n];
    let in_item = d.c * d.h * d.w;
    let out_item = d.oc * cols_n;
    for item in 0..d.n {
        let x = &input.data()[item * in_item..(item + 1) * in_item];
        im2col_into(
            x,
            (d.c, d.h, d.w),
            (d.kh, d.kw),
            stride,
            pad,
            (d.ho, d.wo),
            &mut cols,
        );
        let o = &mut out.data_mut()[item * out_item..(item + 1) * out_item];
        gemm_nn(weight.data(), &cols, d.oc, ckk, cols_n, o);
        for (ch, &b) in bias.data().iter().enumerate() {
            for v in &mut o[ch * cols_n..(ch + 1) * cols_n] {
                *v += b;
            }
        }
    }
    Ok(out)
}

pub(super) fn backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_output: &Tensor<T>,
    kernel: (usize, usize),
    stride: usize,
    pad: usize,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let d = dims(input, weight, stride, pad)?;
    let expect = [d.n, d.oc, d.ho, d.wo];
    if grad_output.shape() != expect {
        return Err(Error::Dimension(format!(
            "conv grad_output shape {:?}, expected {:?}",
            grad_output.shape(),
            expect
        )));
    }
    let _ = kernel;
    let ckk = d.c * d.kh * d.kw;
    let cols_n = d.ho * d.wo;
    let mut grad_input = Tensor::zeros(input.shape());
    let mut grad_weight = Tensor::zeros(weight.shape());
    let mut grad_bias = Tensor::zeros(&[d.oc]);
    let mut cols = vec![T::zero(); ckk * cols_n];
    let mut grad_cols = vec![T::zero(); ckk * cols_n];
    let in_item = d.c * d.h * d.w;
    let out_item = d.oc * cols_n;
    for item in 0..d.n {
        let x = &input.data()[item * in_item..(item + 1) * in_item];
        im2col_into(
            x,
            (d.c, d.h, d.w),
            (d.kh, d.kw),
            stride,
            pad,
            (d.ho, d.wo),
            &mut cols,
        );
        let g = &grad_output.data()[item * out_item..(item + 1) * out_item];
        // accumulate dL/dW and dL/db across the batch
        gemm_a_bt(g, &cols, d.oc, cols_n, ckk, grad_weight.data_mut());
        for (ch, gb) in grad_bias.data_mut().iter_mut().enumerate() {
            let row = &g[ch * cols_n..(ch + 1) * cols_n];
            let mut acc = T::zero();
            for &v in row {
                acc += v;
            }
            *gb += acc;
        }
        grad_cols.fill(T::zero());
        gemm_at_b(weight.data(), g, d.oc, ckk, cols_n, &mut grad_cols);
        let gx = &mut grad_input.data_mut()[item * in_item..(item + 1) * in_item];
        col2im_into(
            &grad_cols,
            (d.c, d.h, d.w),
            (d.kh, d.kw),
            stride,
            pad,
            (d.ho, d.wo),
            gx,
        );
    }
    Ok((grad_input, grad_weight, grad_bias))
}
