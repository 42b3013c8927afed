//! Coregionalized (multi-output) Gaussian process regression for RSSI
//! fingerprint augmentation: kernel algebra, exact inference, marginal
//! likelihood fitting, and posterior prediction.
//!
//! The crate is `no_std`-compatible (alloc required; enable the `libm`
//! feature when `std` is off). Everything here is pure computation: models
//! and training sets are immutable once built, and every operation is safe
//! to call concurrently.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod engine;
mod error;
mod fit;
mod kernel;
mod optim;
mod rng;
mod scalar;

pub mod linalg;
pub mod model;

pub use engine::{
    joint_covariance, log_marginal_likelihood, log_marginal_with_grad, predict,
    ComponentGradient, ModelGradient, NumericOpts, Predictor,
};
pub use error::{GpError, KernelError};
pub use fit::{fit, FitOptions};
pub use kernel::{distance, KernelSpec, ParamKind};
pub use model::{
    CoregionalizedModel, FitReport, LatentComponent, PosteriorPrediction, Standardizer,
    TrainingSet,
};
pub use optim::{minimize, LbfgsOpts, LbfgsOutcome};
pub use rng::SeedRng;
pub use scalar::round_ties_even;
