//! Micro deep-learning stack for comparing QuickProp with gradient descent on
//! small fully-convolutional semantic-segmentation networks.
//!
//! Math is generic over [`Scalar`] (`f32`/`f64`); the aliases below fix the
//! 64-bit instantiation the harness uses.

pub mod datagen;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod ops;
pub mod optim;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::TensorOf;

pub type Tensor = TensorOf<f64>;
pub type Network = nn::NetworkOf<f64>;
pub type ForwardCache = nn::ForwardCacheOf<f64>;
pub type OptimConfig = optim::OptimConfigOf<f64>;
pub type QuickPropState = optim::QuickPropStateOf<f64>;
pub type ParabolaCoeffs = optim::ParabolaCoeffsOf<f64>;
