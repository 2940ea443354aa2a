//! Utility functions and the (relative) payoffs built from them.
//!
//! The relative payoff of a portfolio `nu` on a return vector `r` is
//! `u(<nu, r>) / u(r*)` where `r*` is the best single-asset return in
//! hindsight. It always lies in `(0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::market::ReturnsMatrix;
use crate::portfolio::Portfolio;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Utility<T> {
    /// `u(x) = x^alpha`, `alpha` in `(0, 1]`.
    Power { alpha: T },
    /// `u(x) = ln x`. Only admitted for the ordinary objective.
    Log,
}

/// Which empirical objective is maximized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Mean of `u(<nu, r_k>) / u(r_k*)`.
    Relative,
    /// Mean of `u(<nu, r_k>)`.
    Ordinary,
}

impl Objective {
    pub fn is_relative(self) -> bool {
        matches!(self, Objective::Relative)
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Relative => "relative",
            Objective::Ordinary => "ordinary",
        }
    }
}

impl<T: Scalar> Utility<T> {
    pub fn power(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(domain(format!("power exponent {alpha} outside (0, 1]")));
        }
        Ok(Utility::Power { alpha })
    }

    /// Exponent of a power utility, `None` for log.
    pub fn alpha(&self) -> Option<T> {
        match *self {
            Utility::Power { alpha } => Some(alpha),
            Utility::Log => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Utility::Power { alpha } = *self {
            Self::power(alpha)?;
        }
        Ok(())
    }

    /// Rejects the log utility under the relative objective, where `u(r*)`
    /// may be nonpositive.
    pub fn check_objective(&self, objective: Objective) -> Result<()> {
        self.validate()?;
        if objective.is_relative() && matches!(self, Utility::Log) {
            return Err(domain("log utility is only admitted for the ordinary objective"));
        }
        Ok(())
    }

    pub fn eval(&self, x: T) -> Result<T> {
        check_positive(x)?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: T) -> T {
        match *self {
            Utility::Power { alpha } => x.powf(alpha),
            Utility::Log => x.ln(),
        }
    }

    /// Left derivative `D_- u(x)`; equal to the derivative for these smooth
    /// utilities.
    pub fn left_derivative(&self, x: T) -> Result<T> {
        check_positive(x)?;
        Ok(match *self {
            Utility::Power { alpha } => alpha * x.powf(alpha - T::one()),
            Utility::Log => x.recip(),
        })
    }
}

fn check_positive<T: Scalar>(x: T) -> Result<()> {
    if !(x > T::zero()) {
        return Err(domain(format!("utility argument {x} must be positive")));
    }
    Ok(())
}

/// Index and value of the best asset; ties go to the lowest index.
pub fn best_return<T: Scalar>(r: &[T]) -> Result<(usize, T)> {
    let (&first, rest) = r.split_first().ok_or(Error::Empty("return vector"))?;
    let mut best = (0, first);
    for (i, &x) in rest.iter().enumerate() {
        if x > best.1 {
            best = (i + 1, x);
        }
    }
    Ok(best)
}

#[inline]
pub(crate) fn row_max<T: Scalar>(r: &[T]) -> T {
    r.iter().copied().fold(T::neg_infinity(), T::max)
}

/// Relative payoff `u(<nu, r>) / u(r*)` of a power utility.
pub fn relative_payoff<T: Scalar>(u: &Utility<T>, nu: &Portfolio<T>, r: &[T]) -> Result<T> {
    u.check_objective(Objective::Relative)?;
    nu.check_dim(r.len())?;
    if let Some(x) = r.iter().find(|x| !(**x > T::zero())) {
        return Err(domain(format!("return {x} must be positive")));
    }
    let (_, best) = best_return(r)?;
    Ok(payoff_unchecked(u, Objective::Relative, nu.dot(r), best))
}

/// Payoff of one row given the portfolio return `port` and the row maximum.
///
/// For power utilities the ratio is formed before exponentiation, which is
/// algebraically identical and keeps the result inside `(0, 1]`.
#[inline]
pub(crate) fn payoff_unchecked<T: Scalar>(u: &Utility<T>, objective: Objective, port: T, best: T) -> T {
    match (objective, *u) {
        (Objective::Relative, Utility::Power { alpha }) => (port / best).powf(alpha),
        (Objective::Relative, Utility::Log) => port.ln() / best.ln(),
        (Objective::Ordinary, _) => u.eval_unchecked(port),
    }
}

/// Empirical (relative or ordinary) utility of `nu` on the sample `returns`.
pub fn empirical_utility<T: Scalar>(
    u: &Utility<T>,
    nu: &Portfolio<T>,
    returns: &ReturnsMatrix<T>,
    objective: Objective,
) -> Result<T> {
    u.check_objective(objective)?;
    nu.check_dim(returns.cols())?;
    let mut total = T::zero();
    for row in returns.iter_rows() {
        let port = nu.dot(row);
        if !(port > T::zero()) {
            return Err(domain(format!("portfolio return {port} must be positive")));
        }
        total = total + payoff_unchecked(u, objective, port, row_max(row));
    }
    Ok(total / T::lit(returns.rows() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: Vec<Vec<f64>>) -> ReturnsMatrix<f64> {
        ReturnsMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn eval_examples() {
        let sqrt = Utility::power(0.5).unwrap();
        assert_eq!(sqrt.eval(4.0).unwrap(), 2.0);
        assert_eq!(Utility::power(1.0).unwrap().eval(3.7).unwrap(), 3.7);
        assert_eq!(Utility::<f64>::Log.eval(1.0).unwrap(), 0.0);
        assert!(sqrt.eval(0.0).is_err());
        assert!(sqrt.eval(-1.0).is_err());
        assert!(Utility::power(0.0).is_err());
        assert!(Utility::power(1.5).is_err());
    }

    #[test]
    fn left_derivative_examples() {
        assert_eq!(Utility::power(0.5).unwrap().left_derivative(4.0).unwrap(), 0.25);
        assert_eq!(Utility::<f64>::Log.left_derivative(2.0).unwrap(), 0.5);
        assert!(Utility::<f64>::Log.left_derivative(0.0).is_err());
    }

    #[test]
    fn left_derivative_matches_central_difference_at_1_3() {
        let h = 1e-6;
        let x: f64 = 1.3;
        for u in [Utility::power(0.2).unwrap(), Utility::power(0.5).unwrap(), Utility::Log] {
            let fd = (u.eval(x + h).unwrap() - u.eval(x - h).unwrap()) / (2.0 * h);
            assert!((u.left_derivative(x).unwrap() - fd).abs() <= 1e-6);
        }
    }

    #[test]
    fn best_return_examples() {
        assert_eq!(best_return(&[1.0, 2.0]).unwrap(), (1, 2.0));
        assert_eq!(best_return(&[3.0, 3.0]).unwrap(), (0, 3.0));
        assert_eq!(best_return(&[0.9, 1.1, 1.05]).unwrap(), (1, 1.1));
        assert!(best_return::<f64>(&[]).is_err());
    }

    #[test]
    fn relative_payoff_examples() {
        let u = Utility::power(0.5).unwrap();
        let r = [1.0, 2.0];
        assert_eq!(relative_payoff(&u, &Portfolio::vertex(2, 1), &r).unwrap(), 1.0);
        let half = Portfolio::new(vec![0.5, 0.5]).unwrap();
        let expected = 1.5f64.sqrt() / 2f64.sqrt();
        assert!((relative_payoff(&u, &half, &r).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.86603).abs() < 1e-5);
        let flat = [1.7, 1.7, 1.7];
        let nu = Portfolio::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((relative_payoff(&u, &nu, &flat).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_payoff(&u, &half, &[1.0, 0.0]).is_err());
        assert!(relative_payoff(&Utility::Log, &half, &r).is_err());
    }

    #[test]
    fn empirical_utility_examples() {
        let one = matrix(vec![vec![1.0, 2.0]]);
        let u = Utility::power(0.3).unwrap();
        let v = empirical_utility(&u, &Portfolio::vertex(2, 1), &one, Objective::Relative).unwrap();
        assert_eq!(v, 1.0);

        let two = matrix(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        let lin = Utility::power(1.0).unwrap();
        let half = Portfolio::uniform(2);
        let v = empirical_utility(&lin, &half, &two, Objective::Relative).unwrap();
        assert!((v - 0.75).abs() < 1e-15);

        let ord = empirical_utility(&lin, &half, &two, Objective::Ordinary).unwrap();
        assert!((ord - 1.5).abs() < 1e-15);
        assert!(empirical_utility(&Utility::Log, &half, &two, Objective::Relative).is_err());
        assert!(empirical_utility(&lin, &Portfolio::uniform(3), &two, Objective::Relative).is_err());
    }

    fn simplex(d: usize) -> impl Strategy<Value = Portfolio<f64>> {
        prop::collection::vec(0.0f64..1.0, d).prop_filter_map("nonzero", |s| Portfolio::from_unnormalized(s).ok())
    }

    fn rows(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.5f64..2.0, d), n)
    }

    proptest! {
        #[test]
        fn relative_payoff_in_unit_interval(
            (nu, r) in (1usize..8).prop_flat_map(|d| (simplex(d), prop::collection::vec(0.01f64..100.0, d))),
            alpha in 0.01f64..=1.0,
        ) {
            let u = Utility::power(alpha).unwrap();
            let f = relative_payoff(&u, &nu, &r).unwrap();
            prop_assert!(f > 0.0 && f <= 1.0 + 1e-15);
        }

        #[test]
        fn relative_utility_ignores_row_scale(
            (nu, data) in (1usize..6).prop_flat_map(|d| (simplex(d), rows(12, d))),
            scales in prop::collection::vec(0.1f64..10.0, 12),
            alpha in 0.05f64..=1.0,
        ) {
            let u = Utility::power(alpha).unwrap();
            let scaled: Vec<Vec<f64>> = data.iter().zip(&scales)
                .map(|(row, c)| row.iter().map(|x| x * c).collect()).collect();
            let a = empirical_utility(&u, &nu, &matrix(data), Objective::Relative).unwrap();
            let b = empirical_utility(&u, &nu, &matrix(scaled), Objective::Relative).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn empirical_utility_is_concave(
            (p, q, data) in (2usize..6).prop_flat_map(|d| (simplex(d), simplex(d), rows(10, d))),
            alpha in 0.05f64..=1.0,
            relative in any::<bool>(),
            log in any::<bool>(),
        ) {
            let (u, obj) = if log {
                (Utility::Log, Objective::Ordinary)
            } else {
                (Utility::power(alpha).unwrap(), if relative { Objective::Relative } else { Objective::Ordinary })
            };
            let r = matrix(data);
            let mid = Portfolio::from_unnormalized(
                p.weights().iter().zip(q.weights()).map(|(a, b)| 0.5 * (a + b)).collect()).unwrap();
            let fp = empirical_utility(&u, &p, &r, obj).unwrap();
            let fq = empirical_utility(&u, &q, &r, obj).unwrap();
            let fm = empirical_utility(&u, &mid, &r, obj).unwrap();
            prop_assert!(fm >= 0.5 * (fp + fq) - 1e-12);
        }

        #[test]
        fn moving_toward_best_asset_never_hurts(
            (nu, r) in (2usize..6).prop_flat_map(|d| (simplex(d), prop::collection::vec(0.1f64..10.0, d))),
            t1 in 0.0f64..1.0,
            t2 in 0.0f64..1.0,
            alpha in 0.05f64..=1.0,
        ) {
            let u = Utility::power(alpha).unwrap();
            let (j, _) = best_return(&r).unwrap();
            let toward = |t: f64| {
                let w: Vec<f64> = nu.weights().iter().enumerate()
                    .map(|(i, &x)| (1.0 - t) * x + if i == j { t } else { 0.0 }).collect();
                Portfolio::from_unnormalized(w).unwrap()
            };
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let f_lo = relative_payoff(&u, &toward(lo), &r).unwrap();
            let f_hi = relative_payoff(&u, &toward(hi), &r).unwrap();
            prop_assert!(f_hi >= f_lo - 1e-14);
        }

        #[test]
        fn left_derivative_matches_finite_differences(x in 0.1f64..10.0, alpha in 0.05f64..=1.0, log in any::<bool>()) {
            let u = if log { Utility::Log } else { Utility::power(alpha).unwrap() };
            let h = 1e-5 * x;
            let fd = (u.eval(x + h).unwrap() - u.eval(x - h).unwrap()) / (2.0 * h);
            let d = u.left_derivative(x).unwrap();
            prop_assert!((d - fd).abs() <= 1e-6 * d.abs());
        }
    }
}
