//! Independent reference implementations backing the fpaug test suites.
//!
//! Nothing here is reachable from production code: the workspace consumes
//! this crate exclusively through dev-dependencies. Implementations favor
//! being obviously correct over being fast, and deliberately avoid sharing
//! numerical routes with `fpaug-core` (decimal arithmetic instead of f64
//! where it matters, Gaussian elimination instead of Cholesky).

pub mod bigdec;
pub mod fd;
pub mod kernels;
pub mod naive_gp;
pub mod synthetic;

pub use bigdec::BigDec;
pub use fd::{central_diff, grad_error};
pub use kernels::{matern52_value, rbf_value, RefKernel};
pub use naive_gp::{RefComponent, RefMogp};
pub use synthetic::{generate, SplitMix64, SyntheticConfig, SyntheticWorld};
