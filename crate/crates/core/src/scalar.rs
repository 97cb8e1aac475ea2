use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point element type for all tensors and kernels.
///
/// The crate is generic over this trait so the same code runs in 32-bit
/// mode (training) and 64-bit mode (finite-difference gradient checks).
pub trait Scalar:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::Debug
    + std::str::FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Dtype tag written into checkpoint headers.
    const DTYPE: &'static str;

    fn of_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
    fn of_f32(v: f32) -> Self;
    fn as_f32(self) -> f32;

    /// Uniform sample in [0, 1).
    fn uniform01<R: Rng>(rng: &mut R) -> Self;

    /// Standard normal sample.
    fn standard_normal<R: Rng>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    const DTYPE: &'static str = "f32";

    fn of_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn of_f32(v: f32) -> Self {
        v
    }
    fn as_f32(self) -> f32 {
        self
    }
    fn uniform01<R: Rng>(rng: &mut R) -> Self {
        rng.gen::<f32>()
    }
    fn standard_normal<R: Rng>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for f64 {
    const DTYPE: &'static str = "f64";

    fn of_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn of_f32(v: f32) -> Self {
        v as f64
    }
    fn as_f32(self) -> f32 {
        self as f32
    }
    fn uniform01<R: Rng>(rng: &mut R) -> Self {
        rng.gen::<f64>()
    }
    fn standard_normal<R: Rng>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}
