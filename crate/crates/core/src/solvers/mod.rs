//! Empirical utility maximizers.

mod bisection;
mod eg;
mod gdseg;

pub use bisection::{bisect_two_asset, TwoAssetObjective, DEFAULT_TOL};
pub use eg::{eg_step, lipschitz_constant, seg_average, SegConfig, SegOutcome};
pub use gdseg::{best_of_k_gdseg, derived_seed, gdseg, BestOfK, GdsegConfig, GdsegOutput, SolveTrace, TracePoint};
