//! Floating-point abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Real scalar the solvers, payoffs and bounds are generic over.
///
/// Implemented for `f32` and `f64`. Simulation and experiment code work in
/// `f64` and convert with [`crate::ReturnsMatrix::cast`] when needed.
pub trait Scalar: Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Tolerance used when checking that weights sum to one.
    const SIMPLEX_TOL: f64;

    /// Converts an `f64` literal. Every finite `f64` maps to a value of the
    /// implementing type, possibly with rounding.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {
    const SIMPLEX_TOL: f64 = 1e-5;
}

impl Scalar for f64 {
    const SIMPLEX_TOL: f64 = 1e-12;
}
