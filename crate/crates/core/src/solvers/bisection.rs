//! Two-asset (cash + one risky asset) maximizer.
//!
//! With `nu = (1 - w, w)` each row contributes `(c_k + b_k w)^alpha` where,
//! for the relative objective, `c_k = 1 / max(1, r_k)` and
//! `b_k = (r_k - 1) / max(1, r_k)`, and for the ordinary objective `c_k = 1`,
//! `b_k = r_k - 1`. The objective is concave in `w`, so its maximizer on
//! `[0, 1]` is found by bisection on the derivative.

use crate::error::{config, domain, Result};
use crate::market::ReturnsMatrix;
use crate::scalar::Scalar;
use crate::utility::{Objective, Utility};

/// Default argument tolerance of [`bisect_two_asset`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Per-row affine coefficients of the two-asset problem.
#[derive(Clone, Debug)]
pub struct TwoAssetObjective<T> {
    alpha: T,
    intercept: Vec<T>,
    slope: Vec<T>,
}

impl<T: Scalar> TwoAssetObjective<T> {
    /// `returns` must be `n x 2` with the first column identically one.
    pub fn new(u: &Utility<T>, returns: &ReturnsMatrix<T>, objective: Objective) -> Result<Self> {
        let alpha = match *u {
            Utility::Power { alpha } => alpha,
            Utility::Log => return Err(domain("two-asset bisection expects a power utility")),
        };
        u.validate()?;
        if returns.cols() != 2 {
            return Err(domain(format!("expected 2 columns, found {}", returns.cols())));
        }
        if let Some(k) = returns.iter_rows().position(|r| r[0] != T::one()) {
            return Err(domain(format!(
                "column 1 must be cash (all ones); row {} differs",
                k + 1
            )));
        }
        let (intercept, slope) = returns
            .iter_rows()
            .map(|row| {
                let r = row[1];
                match objective {
                    Objective::Relative => {
                        let best = r.max(T::one());
                        (best.recip(), (r - T::one()) / best)
                    }
                    Objective::Ordinary => (T::one(), r - T::one()),
                }
            })
            .unzip();
        Ok(Self {
            alpha,
            intercept,
            slope,
        })
    }

    fn n(&self) -> T {
        T::lit(self.intercept.len() as f64)
    }

    /// Empirical utility at risky weight `w`.
    pub fn value(&self, w: T) -> T {
        let total: T = self
            .intercept
            .iter()
            .zip(&self.slope)
            .map(|(&c, &b)| (c + b * w).powf(self.alpha))
            .sum();
        total / self.n()
    }

    /// Derivative of [`Self::value`] in `w`.
    pub fn derivative(&self, w: T) -> T {
        let e = self.alpha - T::one();
        let total: T = self
            .intercept
            .iter()
            .zip(&self.slope)
            .map(|(&c, &b)| (c + b * w).powf(e) * b)
            .sum();
        self.alpha * total / self.n()
    }

    /// Maximizer on `[0, 1]`: an endpoint when the derivative does not change
    /// sign, otherwise the bisection root of the derivative within `tol`.
    pub fn maximize(&self, tol: T) -> Result<T> {
        if !(tol > T::zero()) {
            return Err(config(format!("bisection tolerance {tol} must be positive")));
        }
        if self.derivative(T::zero()) <= T::zero() {
            return Ok(T::zero());
        }
        if self.derivative(T::one()) >= T::zero() {
            return Ok(T::one());
        }
        let (mut lo, mut hi) = (T::zero(), T::one());
        let half = T::lit(0.5);
        while hi - lo > tol {
            let mid = half * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.derivative(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(half * (lo + hi))
    }
}

/// Optimal risky weight `w` of the cash + one risky asset problem.
pub fn bisect_two_asset<T: Scalar>(
    u: &Utility<T>,
    returns: &ReturnsMatrix<T>,
    objective: Objective,
    tol: T,
) -> Result<T> {
    TwoAssetObjective::new(u, returns, objective)?.maximize(tol)
}
