//! Recursive least squares with time-varying regularization.
//!
//! The crate provides the general time-varying-regularization recursion
//! (information form), fading-regularization RLS, and rank-1
//! fading-regularization RLS (covariance form, same per-step cost as
//! classical RLS), together with the dense kernels they rest on, an
//! error-dynamics analysis toolkit and a reproducible experiment harness.

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod matkit;
pub mod regularizers;

pub use error::{Error, Result};
pub use matkit::Mat;
