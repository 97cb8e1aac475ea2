//! Multi-task convolutional network for binary attribute classification.
//!
//! The crate implements a small CPU training framework around one model
//! family: a shared-trunk convolutional network whose upper layers branch
//! per attribute group, plus an optional score-level auxiliary layer that
//! learns cross-attribute relationships in a second, frozen-base training
//! stage. Everything is generic over the floating-point element type so
//! the exact same code path can be gradient-checked in 64-bit and trained
//! in 32-bit.

pub mod data;
pub mod error;
pub mod layers;
pub mod loss;
pub mod scalar;
pub mod tensor;
pub mod topology;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// 32-bit tensor: the training element type.
pub type Tensor32 = Tensor<f32>;
/// 64-bit tensor: the gradient-checking element type.
pub type Tensor64 = Tensor<f64>;
