//! Portfolio selection by maximizing relative utility over i.i.d. samples of
//! gross returns.
//!
//! The math (payoffs, solvers, bounds) is generic over [`Scalar`], which is
//! implemented for `f32` and `f64`. Simulators and experiment runners work in
//! `f64`. The aliases below name the common concrete types.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod market;
pub mod numeric;
pub mod portfolio;
pub mod scalar;
pub mod sim;
pub mod solvers;
pub mod truth;
pub mod utility;

pub use error::{Error, Result};
pub use market::{ReturnRange, ReturnsMatrix};
pub use portfolio::{Portfolio, DEFAULT_PRUNE_THRESHOLD};
pub use scalar::Scalar;
pub use sim::{MarketSpec, SeedStream};
pub use utility::{empirical_utility, relative_payoff, Objective, Utility};

pub type Portfolio64 = Portfolio<f64>;
pub type Portfolio32 = Portfolio<f32>;
pub type Returns64 = ReturnsMatrix<f64>;
pub type Returns32 = ReturnsMatrix<f32>;
pub type Utility64 = Utility<f64>;
pub type Utility32 = Utility<f32>;
pub type BoundInputs64 = bounds::BoundInputs<f64>;
pub type BoundReport64 = bounds::BoundReport<f64>;
