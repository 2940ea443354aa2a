use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default weight below which [`Portfolio::prune_and_renormalize`] drops an
/// asset.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.001;

/// Weight vector on the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Portfolio<T> {
    weights: Vec<T>,
}

impl<T: Scalar> Portfolio<T> {
    /// Validates nonnegativity and unit sum (within [`Scalar::SIMPLEX_TOL`]).
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("portfolio weights"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidPortfolio(format!("weight {w} is negative or not finite")));
        }
        let sum: T = weights.iter().copied().sum();
        if (sum - T::one()).abs() > T::lit(T::SIMPLEX_TOL) {
            return Err(Error::InvalidPortfolio(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Divides nonnegative scores by their sum.
    pub fn from_unnormalized(scores: Vec<T>) -> Result<Self> {
        if scores.iter().any(|s| !(*s >= T::zero()) || !s.is_finite()) {
            return Err(Error::InvalidPortfolio("scores must be finite and nonnegative".into()));
        }
        let sum: T = scores.iter().copied().sum();
        if !(sum > T::zero()) {
            return Err(Error::InvalidPortfolio("scores sum to zero".into()));
        }
        Ok(Self {
            weights: scores.into_iter().map(|s| s / sum).collect(),
        })
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0, "portfolio dimension must be positive");
        let w = T::one() / T::lit(dim as f64);
        Self { weights: vec![w; dim] }
    }

    /// All mass on asset `index`.
    pub fn vertex(dim: usize, index: usize) -> Self {
        assert!(index < dim, "vertex index out of range");
        let mut weights = vec![T::zero(); dim];
        weights[index] = T::one();
        Self { weights }
    }

    /// Unchecked constructor for internal callers that normalize themselves.
    pub(crate) fn from_normalized(weights: Vec<T>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<T> {
        self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Portfolio return `<nu, r>`.
    #[inline]
    pub fn dot(&self, r: &[T]) -> T {
        debug_assert_eq!(r.len(), self.weights.len());
        self.weights.iter().zip(r).fold(T::zero(), |acc, (&w, &x)| acc + w * x)
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// Zeroes weights below `threshold` and renormalizes the survivors.
    pub fn prune_and_renormalize(&self, threshold: T) -> Result<Self> {
        let kept: Vec<T> = self
            .weights
            .iter()
            .map(|&w| if w >= threshold { w } else { T::zero() })
            .collect();
        if kept.iter().all(|w| *w == T::zero()) {
            return Err(Error::InvalidPortfolio(format!(
                "every weight is below the pruning threshold {threshold}"
            )));
        }
        Self::from_unnormalized(kept)
    }

    /// Indices with nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > T::zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> Portfolio<U> {
        Portfolio {
            weights: self.weights.iter().map(|w| U::lit(w.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_off_simplex() {
        assert!(Portfolio::new(vec![0.5, 0.6]).is_err());
        assert!(Portfolio::new(vec![-0.1, 1.1]).is_err());
        assert!(Portfolio::<f64>::new(vec![]).is_err());
        assert!(Portfolio::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn prune_examples() {
        let p = Portfolio::new(vec![0.9995, 0.0005]).unwrap();
        assert_eq!(p.prune_and_renormalize(0.001).unwrap().weights(), &[1.0, 0.0]);

        let p = Portfolio::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(p.prune_and_renormalize(0.001).unwrap().weights(), &[0.5, 0.5]);

        let p = Portfolio::<f64>::new(vec![0.0008, 0.4996, 0.4996]).unwrap();
        let q = p.prune_and_renormalize(0.001).unwrap();
        assert_eq!(q.weights()[0], 0.0);
        assert!((q.weights()[1] - 0.5).abs() < 1e-15);
        assert!((q.weights()[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn prune_everything_is_an_error() {
        let p = Portfolio::<f64>::uniform(2000);
        assert!(p.prune_and_renormalize(0.001).is_err());
    }

    #[test]
    fn f32_portfolios_work() {
        let p = Portfolio::<f32>::uniform(3);
        assert!((p.dot(&[1.0, 2.0, 3.0]) - 2.0).abs() < 1e-6);
    }
}
