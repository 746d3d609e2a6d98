//! Numerical laboratory for skew-product solenoidal attractors
//! `T(x, y) = (bx mod 1, γy + φ(x))`.
//!
//! The function and series layers ([`analytic`], [`symbolic`]) are generic
//! over the floating point type through [`Scalar`]; the measure, entropy and
//! diagnostic layers work in `f64`. The aliases below fix the `f64`
//! instantiation used by the rest of the crate.

pub mod analytic;
pub mod attractor;
pub mod config;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod measure;
pub mod partition;
pub mod regression;
pub mod scalar;
pub mod separation;
pub mod symbolic;

pub use analytic::{cohomological_phi, PeriodicFn};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use experiment::run_experiment;
pub use scalar::Scalar;
pub use symbolic::{nhat, word_point, SystemParams, Tail, Word};

pub type PeriodicFn64 = PeriodicFn<f64>;
pub type PeriodicFn32 = PeriodicFn<f32>;
pub type Params = SystemParams<f64>;
pub type Params32 = SystemParams<f32>;
