//! Stochastic theta method (STM) for scalar SDEs driven by fractional Brownian
//! motion, together with the tooling needed to study its mean-square stability:
//! exact fBm increment samplers, Kummer / parabolic cylinder special functions,
//! linear and nonlinear integrators, Monte Carlo ensembles and closed-form
//! stability predicates.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature adds the
//! circulant-embedding sampler, which needs an FFT.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN gets rejected along with the bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fbm;
pub mod lab;
pub mod linalg;
pub mod models;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod stm;
pub mod theory;

pub use error::{Error, Result};
pub use fbm::{FbmGrid, FbmSampler, IncrementBlock, SamplerMethod};
pub use lab::{EnsembleConfig, MeanSquareSeries, StabilityLabel, StabilityVerdict};
pub use models::{AssumptionConstants, LinearTestModel, NonlinearModel, SignConvention};
pub use stm::{LogSignedState, ThetaScheme, Trajectory};
