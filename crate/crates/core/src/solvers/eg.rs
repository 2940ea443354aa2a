//! Exponentiated gradient on the simplex and its stochastic, averaged
//! variant (SEG) for the relative power-utility objective.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::market::{ReturnRange, ReturnsMatrix};
use crate::portfolio::Portfolio;
use crate::scalar::Scalar;
use crate::sim::SeedStream;
use crate::utility::{Objective, Utility};

/// Bound on the subgradient components of the relative loss,
/// `D_- u(r_min) * r_max / u(r_max)`.
pub fn lipschitz_constant<T: Scalar>(u: &Utility<T>, range: &ReturnRange<T>) -> Result<T> {
    if matches!(u, Utility::Log) {
        return Err(domain("the Lipschitz constant is defined for power utilities only"));
    }
    if !(range.min > T::zero() && range.min <= range.max) {
        return Err(domain(format!("invalid return range [{}, {}]", range.min, range.max)));
    }
    Ok(u.left_derivative(range.min)? * range.max / u.eval(range.max)?)
}

/// One multiplicative update `nu^i exp(eta D_- u(<nu, r>) r^i)`, normalized.
/// `r_scaled` holds returns divided by their row maximum.
pub fn eg_step<T: Scalar>(nu: &Portfolio<T>, r_scaled: &[T], eta: T, u: &Utility<T>) -> Result<Portfolio<T>> {
    if !(eta >= T::zero()) {
        return Err(config(format!("learning rate {eta} must be nonnegative")));
    }
    if matches!(u, Utility::Log) {
        return Err(domain("eg_step expects a power utility"));
    }
    nu.check_dim(r_scaled.len())?;
    let ceiling = T::one() + T::lit(T::SIMPLEX_TOL);
    if r_scaled.iter().any(|&x| !(x > T::zero() && x <= ceiling)) {
        return Err(domain("scaled returns must lie in (0, 1]"));
    }
    let grad = u.left_derivative(nu.dot(r_scaled))?;
    Ok(multiplicative_update(nu.weights(), r_scaled, eta * grad))
}

/// `w^i ∝ nu^i exp(scale * r^i)`, shifted by the largest exponent so the
/// largest factor is exactly one.
pub(crate) fn multiplicative_update<T: Scalar>(nu: &[T], r: &[T], scale: T) -> Portfolio<T> {
    let top = r.iter().copied().fold(T::neg_infinity(), T::max);
    let a: Vec<T> = nu.iter().zip(r).map(|(&w, &x)| w * (scale * (x - top)).exp()).collect();
    let sum: T = a.iter().copied().sum();
    Portfolio::from_normalized(a.into_iter().map(|x| x / sum).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegConfig {
    /// Number of stochastic steps.
    pub m: usize,
    /// Confidence parameter used when the run is reported with bounds.
    pub delta: f64,
}

impl SegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(config("SEG needs m >= 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegOutcome<T> {
    /// Uniform average of the iterates `nu_0, ..., nu_{m-1}`.
    pub average: Portfolio<T>,
    pub eta: T,
    pub lipschitz: T,
    /// Sum of relative payoffs earned online on the drawn rows.
    pub online_payoff: T,
    /// Upper bound on the best fixed portfolio's payoff on the drawn rows
    /// (comparator value plus its Frank-Wolfe gap).
    pub comparator_payoff: T,
    /// `comparator_payoff - online_payoff`: a certified upper bound on the
    /// realized regret.
    pub regret: T,
    /// `2 L sqrt(m ln d)`.
    pub regret_bound: T,
}

/// Runs `m` EG steps on rows drawn uniformly with replacement and averages
/// the iterates. Uses `eta = sqrt(ln d / m) / L` with `L` from the raw
/// return range.
pub fn seg_average<T: Scalar>(
    returns: &ReturnsMatrix<T>,
    u: &Utility<T>,
    cfg: &SegConfig,
    seed: SeedStream,
) -> Result<SegOutcome<T>> {
    cfg.validate()?;
    u.check_objective(Objective::Relative)?;
    if matches!(u, Utility::Log) {
        return Err(domain("SEG expects a power utility"));
    }
    let d = returns.cols();
    let m = cfg.m;
    let lipschitz = lipschitz_constant(u, &returns.return_range())?;
    let ln_d = T::lit((d as f64).ln());
    let m_t = T::lit(m as f64);
    let eta = (ln_d / m_t).sqrt() / lipschitz;
    let scaled = returns.normalize_by_best();

    let mut rng = seed.rng();
    let mut counts = vec![0usize; returns.rows()];
    let mut nu = Portfolio::<T>::uniform(d);
    let mut sum = vec![T::zero(); d];
    let mut online = T::zero();
    for _ in 0..m {
        let k = rng.random_range(0..returns.rows());
        counts[k] += 1;
        for (s, &w) in sum.iter_mut().zip(nu.weights()) {
            *s = *s + w;
        }
        let row = scaled.row(k);
        let port = nu.dot(row);
        online = online + u.eval_unchecked(port);
        let grad = u.left_derivative(port)?;
        nu = multiplicative_update(nu.weights(), row, eta * grad);
    }
    let average = Portfolio::from_normalized(sum.into_iter().map(|s| s / m_t).collect());
    let comparator_payoff = comparator_upper_bound(&scaled, &counts, u);
    Ok(SegOutcome {
        average,
        eta,
        lipschitz,
        online_payoff: online,
        comparator_payoff,
        regret: comparator_payoff - online,
        regret_bound: T::lit(2.0) * lipschitz * (m_t * ln_d).sqrt(),
    })
}

/// Upper bound on `max_nu sum_k c_k <nu, s_k>^alpha` for the drawn
/// multiset: value at an approximate maximizer plus the Frank-Wolfe duality
/// gap, which bounds the remaining suboptimality of a concave objective.
fn comparator_upper_bound<T: Scalar>(scaled: &ReturnsMatrix<T>, counts: &[usize], u: &Utility<T>) -> T {
    let rows: Vec<(&[T], T)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (scaled.row(k), T::lit(c as f64)))
        .collect();
    let d = scaled.cols();
    let eval = |nu: &[T]| -> (T, Vec<T>) {
        let mut value = T::zero();
        let mut grad = vec![T::zero(); d];
        for &(row, c) in &rows {
            let port = row.iter().zip(nu).fold(T::zero(), |a, (&x, &w)| a + x * w);
            value = value + c * u.eval_unchecked(port);
            let g = c * u.left_derivative(port).expect("positive portfolio return");
            for (gi, &x) in grad.iter_mut().zip(row) {
                *gi = *gi + g * x;
            }
        }
        (value, grad)
    };

    let total: T = rows.iter().map(|&(_, c)| c).sum();
    let mut nu = vec![T::one() / T::lit(d as f64); d];
    let (mut value, mut grad) = eval(&nu);
    let mut step = T::one() / total;
    let max_step = T::lit(1e12) / total;
    for _ in 0..3000 {
        let cand = multiplicative_update(&nu, &grad, step).into_weights();
        let (cv, cg) = eval(&cand);
        if cv >= value {
            nu = cand;
            value = cv;
            grad = cg;
            step = (step * T::lit(1.5)).min(max_step);
        } else {
            step = step * T::lit(0.5);
        }
    }
    let top = grad.iter().copied().fold(T::neg_infinity(), T::max);
    let inner = grad.iter().zip(&nu).fold(T::zero(), |a, (&g, &w)| a + g * w);
    value + (top - inner).max(T::zero())
}
