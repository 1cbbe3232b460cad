//! Scalar abstraction for the numeric core.
//!
//! Everything numeric is generic over [`Scalar`] so the same code can run in
//! `f32` (the training default: model state is stored in 32-bit reals) or in
//! `f64` (useful in tests where finite differences need the extra headroom).
//! Reductions and the eigensolver always accumulate in `f64` internally
//! regardless of the element type.

use num_traits::Float;

/// Floating-point element type of tensors and model parameters.
pub trait Scalar:
    Float
    + Default
    + Send
    + Sync
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
    fn from_f32(x: f32) -> Self;
    fn as_f32(self) -> f32;
}

impl Scalar for f32 {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn from_f32(x: f32) -> Self {
        x
    }
    #[inline(always)]
    fn as_f32(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn from_f32(x: f32) -> Self {
        x as f64
    }
    #[inline(always)]
    fn as_f32(self) -> f32 {
        self as f32
    }
}
