//! Object-centric scene autoencoder built on conditional slot attention with
//! a grounded slot dictionary.
//!
//! The crate provides, from the bottom up:
//!
//! * a small dense-tensor core with reverse-mode autodiff ([`tape`]), a
//!   Jacobi eigensolver ([`linalg`]) and a Hungarian assignment solver
//!   ([`assign`]);
//! * the slot-attention mechanism ([`attention`]), the spectral abstraction
//!   that estimates how many slots a scene needs ([`abstraction`]), and the
//!   grounded slot dictionary that conditions slot initialization
//!   ([`gsd`]);
//! * the scene autoencoder and training objectives ([`autoenc`],
//!   [`reasoning`], [`train`]), slot-prompted scene composition
//!   ([`composition`]) and the unsupervised evaluation metrics
//!   ([`metrics`]);
//! * synthetic dataset generators ([`datasets`]), on-disk formats ([`io`],
//!   [`checkpoint`]) and run configuration ([`config`]).
//!
//! Everything numeric is generic over the [`scalar::Scalar`] element type;
//! the aliases below fix the `f32` instantiation used for real training
//! runs (reductions and the eigensolver accumulate in `f64` regardless).

pub mod abstraction;
pub mod assign;
pub mod attention;
pub mod autoenc;
pub mod checkpoint;
pub mod composition;
pub mod config;
pub mod datasets;
pub mod error;
pub mod gsd;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod params;
pub mod reasoning;
pub mod rng;
pub mod scalar;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{CosaError, Result};
pub use scalar::Scalar;

/// Training-precision tensor.
pub type Tensor32 = tensor::Tensor<f32>;
/// Training-precision autodiff tape.
pub type Tape32 = tape::Tape<f32>;
/// Training-precision parameter store.
pub type ParamStore32 = params::ParamStore<f32>;
/// Training-precision model.
pub type Model32 = autoenc::Model<f32>;
