//! The six layer types with forward and backward passes.
//!
//! Layers are stateless functions: parameters and forward caches are passed
//! explicitly so the topology module can own all tensors centrally (needed
//! for freeze masks, checkpoints and the optimizer). A cache handed to
//! [`backward`] must come from the immediately preceding [`forward_cached`]
//! call on the same spec.

mod conv;
mod dense;
mod dropout;
mod lrn;
mod pool;

pub mod check;

pub use check::gradient_check;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{conv_output_len, rand_init_with, InitScheme, Tensor};
use rand_chacha::ChaCha8Rng;

/// Forward-pass mode. Dropout behaves differently in the two modes; every
/// other layer ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Configuration of one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        pad: usize,
    },
    MaxPool {
        kernel: usize,
        stride: usize,
    },
    Lrn {
        local_size: usize,
        alpha: f64,
        beta: f64,
        k: f64,
    },
    Relu,
    FullyConnected {
        units: usize,
    },
    Dropout {
        rate: f64,
    },
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Conv {
                out_channels,
                kernel,
                stride,
                ..
            } => {
                if out_channels == 0 || kernel.0 == 0 || kernel.1 == 0 || stride == 0 {
                    return Err(Error::Config(format!(
                        "conv channels/kernel/stride must be >= 1, got {:?}",
                        self
                    )));
                }
            }
            LayerSpec::MaxPool { kernel, stride } => {
                if kernel == 0 || stride == 0 {
                    return Err(Error::Config("pool kernel/stride must be >= 1".into()));
                }
            }
            LayerSpec::Lrn { local_size, .. } => {
                if local_size == 0 || local_size % 2 == 0 {
                    return Err(Error::Config(format!(
                        "lrn local_size must be odd and >= 1, got {}",
                        local_size
                    )));
                }
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::Config(format!(
                        "dropout rate must be in [0,1), got {}",
                        rate
                    )));
                }
            }
            LayerSpec::FullyConnected { units } => {
                if units == 0 {
                    return Err(Error::Config("fully connected units must be >= 1".into()));
                }
            }
            LayerSpec::Relu => {}
        }
        Ok(())
    }

    /// Output shape for a batched input shape (leading dim is the batch).
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *self {
            LayerSpec::Conv {
                out_channels,
                kernel,
                stride,
                pad,
            } => {
                let (n, _c, h, w) = rank4(input, "conv input")?;
                let ho = conv_output_len(h, kernel.0, stride, pad)?;
                let wo = conv_output_len(w, kernel.1, stride, pad)?;
                Ok(vec![n, out_channels, ho, wo])
            }
            LayerSpec::MaxPool { kernel, stride } => {
                let (n, c, h, w) = rank4(input, "pool input")?;
                let ho = conv_output_len(h, kernel, stride, 0)?;
                let wo = conv_output_len(w, kernel, stride, 0)?;
                Ok(vec![n, c, ho, wo])
            }
            LayerSpec::Lrn { .. } => {
                rank4(input, "lrn input")?;
                Ok(input.to_vec())
            }
            LayerSpec::Relu | LayerSpec::Dropout { .. } => Ok(input.to_vec()),
            LayerSpec::FullyConnected { units } => {
                if input.len() < 2 {
                    return Err(Error::Dimension(format!(
                        "fully connected input needs a batch dim, got {:?}",
                        input
                    )));
                }
                Ok(vec![input[0], units])
            }
        }
    }

    /// Weight and bias shapes, if this layer kind has parameters.
    pub fn param_shapes(&self, input: &[usize]) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
        match *self {
            LayerSpec::Conv {
                out_channels,
                kernel,
                ..
            } => {
                let (_n, c, _h, _w) = rank4(input, "conv input")?;
                Ok(Some((
                    vec![out_channels, c, kernel.0, kernel.1],
                    vec![out_channels],
                )))
            }
            LayerSpec::FullyConnected { units } => {
                let features: usize = input[1..].iter().product();
                Ok(Some((vec![features, units], vec![units])))
            }
            _ => Ok(None),
        }
    }
}

fn rank4(shape: &[usize], what: &str) -> Result<(usize, usize, usize, usize)> {
    if shape.len() != 4 {
        return Err(Error::Dimension(format!(
            "{} must be [N,C,H,W], got {:?}",
            what, shape
        )));
    }
    Ok((shape[0], shape[1], shape[2], shape[3]))
}

/// Learnable tensors of a Conv or FullyConnected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Forward-pass intermediates needed by the matching backward pass.
#[derive(Debug, Clone)]
pub enum Cache<T> {
    Conv {
        input: Tensor<T>,
    },
    Pool {
        input_shape: Vec<usize>,
        /// Flat index into the input buffer of each output element's max.
        argmax: Vec<usize>,
    },
    Lrn {
        input: Tensor<T>,
        denom: Tensor<T>,
    },
    Relu {
        input: Tensor<T>,
    },
    Dense {
        /// Input flattened to [N, features].
        input: Tensor<T>,
        orig_shape: Vec<usize>,
    },
    /// `None` in eval mode (identity pass).
    Dropout {
        mask: Option<Tensor<T>>,
    },
}

/// Xavier weights, zero bias; `None` for parameterless layers.
pub fn init_params<T: Scalar>(
    spec: &LayerSpec,
    input_shape: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Option<LayerParams<T>>> {
    match spec.param_shapes(input_shape)? {
        None => Ok(None),
        Some((w_shape, b_shape)) => Ok(Some(LayerParams {
            weight: rand_init_with(&w_shape, InitScheme::XavierUniform, rng),
            bias: Tensor::zeros(&b_shape),
        })),
    }
}

fn require_params<'p, T>(
    spec: &LayerSpec,
    params: Option<&'p LayerParams<T>>,
) -> Result<&'p LayerParams<T>> {
    params.ok_or_else(|| Error::Contract(format!("{:?} needs parameters, none given", spec)))
}

/// Runs the layer, returning output only (no cache kept).
pub fn forward<T: Scalar>(
    spec: &LayerSpec,
    params: Option<&LayerParams<T>>,
    input: &Tensor<T>,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor<T>> {
    spec.validate()?;
    match *spec {
        LayerSpec::Conv { kernel, stride, pad, .. } => {
            let p = require_params(spec, params)?;
            conv::forward(input, &p.weight, &p.bias, kernel, stride, pad)
        }
        LayerSpec::MaxPool { kernel, stride } => Ok(pool::forward(input, kernel, stride)?.0),
        LayerSpec::Lrn {
            local_size,
            alpha,
            beta,
            k,
        } => Ok(lrn::forward(input, local_size, alpha, beta, k)?.0),
        LayerSpec::Relu => Ok(input.map(|v| if v > T::zero() { v } else { T::zero() })),
        LayerSpec::FullyConnected { .. } => {
            let p = require_params(spec, params)?;
            dense::forward(input, &p.weight, &p.bias)
        }
        LayerSpec::Dropout { rate } => Ok(dropout::forward(input, rate, mode, rng)?.0),
    }
}

/// Runs the layer and keeps what backward needs.
pub fn forward_cached<T: Scalar>(
    spec: &LayerSpec,
    params: Option<&LayerParams<T>>,
    input: &Tensor<T>,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Tensor<T>, Cache<T>)> {
    spec.validate()?;
    match *spec {
        LayerSpec::Conv { kernel, stride, pad, .. } => {
            let p = require_params(spec, params)?;
            let out = conv::forward(input, &p.weight, &p.bias, kernel, stride, pad)?;
            Ok((
                out,
                Cache::Conv {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::MaxPool { kernel, stride } => {
            let (out, argmax) = pool::forward(input, kernel, stride)?;
            Ok((
                out,
                Cache::Pool {
                    input_shape: input.shape().to_vec(),
                    argmax,
                },
            ))
        }
        LayerSpec::Lrn {
            local_size,
            alpha,
            beta,
            k,
        } => {
            let (out, denom) = lrn::forward(input, local_size, alpha, beta, k)?;
            Ok((
                out,
                Cache::Lrn {
                    input: input.clone(),
                    denom,
                },
            ))
        }
        LayerSpec::Relu => {
            let out = input.map(|v| if v > T::zero() { v } else { T::zero() });
            Ok((
                out,
                Cache::Relu {
                    input: input.clone(),
                },
            ))
        }
        LayerSpec::FullyConnected { .. } => {
            let p = require_params(spec, params)?;
            let out = dense::forward(input, &p.weight, &p.bias)?;
            let n = input.shape()[0];
            let features = input.len() / n;
            let flat = input.clone().reshape(&[n, features])?;
            Ok((
                out,
                Cache::Dense {
                    input: flat,
                    orig_shape: input.shape().to_vec(),
                },
            ))
        }
        LayerSpec::Dropout { rate } => {
            let (out, mask) = dropout::forward(input, rate, mode, rng)?;
            Ok((out, Cache::Dropout { mask }))
        }
    }
}

/// Exact reverse-mode gradients of the forward function.
///
/// Returns the gradient w.r.t. the input and, for parameterized layers,
/// gradients in the same shapes as the parameters.
pub fn backward<T: Scalar>(
    spec: &LayerSpec,
    params: Option<&LayerParams<T>>,
    cache: &Cache<T>,
    grad_output: &Tensor<T>,
) -> Result<(Tensor<T>, Option<LayerParams<T>>)> {
    match (spec, cache) {
        (
            LayerSpec::Conv { kernel, stride, pad, .. },
            Cache::Conv { input },
        ) => {
            let p = require_params(spec, params)?;
            let (gx, gw, gb) =
                conv::backward(input, &p.weight, grad_output, *kernel, *stride, *pad)?;
            Ok((gx, Some(LayerParams { weight: gw, bias: gb })))
        }
        (
            LayerSpec::MaxPool { .. },
            Cache::Pool { input_shape, argmax },
        ) => Ok((pool::backward(input_shape, argmax, grad_output), None)),
        (
            LayerSpec::Lrn {
                local_size,
                alpha,
                beta,
                k,
            },
            Cache::Lrn { input, denom },
        ) => Ok((
            lrn::backward(input, denom, grad_output, *local_size, *alpha, *beta, *k)?,
            None,
        )),
        (LayerSpec::Relu, Cache::Relu { input }) => {
            let mut gx = grad_output.clone();
            for (g, &x) in gx.data_mut().iter_mut().zip(input.data()) {
                if x <= T::zero() {
                    *g = T::zero();
                }
            }
            Ok((gx, None))
        }
        (LayerSpec::FullyConnected { .. }, Cache::Dense { input, orig_shape }) => {
            let p = require_params(spec, params)?;
            let (gx, gw, gb) = dense::backward(input, &p.weight, grad_output)?;
            Ok((
                gx.reshape(orig_shape)?,
                Some(LayerParams { weight: gw, bias: gb }),
            ))
        }
        (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => {
            let gx = match mask {
                None => grad_output.clone(),
                Some(m) => {
                    let mut gx = grad_output.clone();
                    for (g, &mv) in gx.data_mut().iter_mut().zip(m.data()) {
                        *g *= mv;
                    }
                    gx
                }
            };
            Ok((gx, None))
        }
        _ => Err(Error::Contract(format!(
            "cache does not match layer {:?}",
            spec
        ))),
    }
}
