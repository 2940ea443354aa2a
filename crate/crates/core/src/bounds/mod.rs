//! High-probability utility bounds for empirically optimal portfolios.
//!
//! The expected supremum of the empirical process is bounded by
//! `2 A K sqrt(2 ln d / n)` for Lipschitz utilities (`alpha = 1`) and by
//! `C A K sqrt((d - 1) / (alpha n))` for Hölder utilities, where `C = 2 C_1`
//! and `C_1 = 12 ∫_0^1 sqrt(ln(5 / z)) dz` comes from Dudley's entropy
//! integral. The other terms are McDiarmid/Hoeffding deviations.

mod rademacher;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::numeric::adaptive_simpson;
use crate::scalar::Scalar;

pub use rademacher::{empirical_rademacher, massart_bound, RademacherEstimate};

/// `sqrt(ln(1 / delta) / (2 n))`.
pub fn mcdiarmid_deviation<T: Scalar>(n: usize, delta: T) -> Result<T> {
    check_n_delta(n, delta)?;
    Ok(((T::one() / delta).ln() / T::lit(2.0 * n as f64)).sqrt())
}

fn check_n_delta<T: Scalar>(n: usize, delta: T) -> Result<()> {
    if n == 0 {
        return Err(config("sample size n must be at least 1"));
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(config(format!("confidence delta {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Truncation point of the substituted integral `∫_0^∞ sqrt(ln 5 + t) e^-t dt`.
const DUDLEY_UPPER: f64 = 60.0;
const DUDLEY_TOL: f64 = 1e-12;

/// `C_1 = 12 ∫_0^1 sqrt(ln(5 / z)) dz`, evaluated after substituting
/// `z = e^-t`, which removes the endpoint singularity.
pub fn dudley_c1_with_tol(tol: f64) -> f64 {
    let ln5 = 5f64.ln();
    12.0 * adaptive_simpson(|t| (ln5 + t).sqrt() * (-t).exp(), 0.0, DUDLEY_UPPER, tol)
}

/// The absolute constant `C = 2 C_1` (about 38.19); computed once.
pub fn dudley_constant<T: Scalar>() -> T {
    static C: OnceLock<f64> = OnceLock::new();
    T::lit(*C.get_or_init(|| 2.0 * dudley_c1_with_tol(DUDLEY_TOL)))
}

/// Which bound on the expected supremum was applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `alpha = 1`: contraction plus Massart.
    Lipschitz,
    /// `alpha < 1`: chaining with the Dudley constant.
    Holder,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs<T> {
    pub n: usize,
    pub d: usize,
    /// Hölder exponent in `(0, 1]`.
    pub alpha: T,
    /// Hölder constant.
    pub k: T,
    /// `sup_x x^alpha / u(x)`.
    pub a: T,
    pub delta: T,
    pub lipschitz: Option<T>,
    pub m: Option<usize>,
}

impl<T: Scalar> BoundInputs<T> {
    /// Inputs for the power utility `x^alpha`, for which `K = A = 1`.
    pub fn power(n: usize, d: usize, alpha: T, delta: T) -> Result<Self> {
        let inputs = Self {
            n,
            d,
            alpha,
            k: T::one(),
            a: T::one(),
            delta,
            lipschitz: None,
            m: None,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn with_seg(mut self, lipschitz: T, m: usize) -> Self {
        self.lipschitz = Some(lipschitz);
        self.m = Some(m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_n_delta(self.n, self.delta)?;
        if self.d < 2 {
            return Err(config("asset count d must be at least 2"));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(self.k > T::zero()) || !(self.a > T::zero()) {
            return Err(config("K and A must be positive"));
        }
        if let Some(l) = self.lipschitz {
            if !(l > T::zero()) {
                return Err(config("Lipschitz constant must be positive"));
            }
        }
        if self.m == Some(0) {
            return Err(config("SEG iteration count m must be at least 1"));
        }
        Ok(())
    }

    pub fn branch(&self) -> Branch {
        if self.alpha == T::one() {
            Branch::Lipschitz
        } else {
            Branch::Holder
        }
    }
}

/// Bound on the expected supremum of the empirical process.
pub fn rademacher_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    inputs.validate()?;
    let n = T::lit(inputs.n as f64);
    let d = T::lit(inputs.d as f64);
    let ak = inputs.a * inputs.k;
    Ok(match inputs.branch() {
        Branch::Lipschitz => T::lit(2.0) * ak * (T::lit(2.0) * d.ln() / n).sqrt(),
        Branch::Holder => dudley_constant::<T>() * ak * ((d - T::one()) / (inputs.alpha * n)).sqrt(),
    })
}

/// Estimation-error bound `U(nu*) - U(nu_hat)`, confidence `1 - delta`.
pub fn estimation_error_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    let n = T::lit(inputs.n as f64);
    Ok(rademacher_bound(inputs)? + (T::lit(2.0) / n * (T::lit(2.0) / inputs.delta).ln()).sqrt())
}

/// Bound on the optimism `U_hat(nu_hat) - U(nu_hat)`, confidence `1 - delta`.
pub fn empirical_gap_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    Ok(rademacher_bound(inputs)? + mcdiarmid_deviation(inputs.n, inputs.delta)?)
}

/// Estimation-error bound for the averaged SEG portfolio, confidence
/// `1 - 3 delta`.
pub fn seg_error_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    let (l, m) = match (inputs.lipschitz, inputs.m) {
        (Some(l), Some(m)) => (l, m),
        _ => return Err(config("SEG bound needs both the Lipschitz constant and m")),
    };
    let ln_d = T::lit((inputs.d as f64).ln());
    Ok(rademacher_bound(inputs)?
        + T::lit(3.0) * mcdiarmid_deviation(inputs.n, inputs.delta)?
        + T::lit(2.0) * l * (ln_d / T::lit(m as f64)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub inputs: BoundInputs<T>,
    pub branch: Branch,
    pub deviation: T,
    pub rademacher_bound: T,
    pub estimation_error_bound: T,
    pub empirical_gap_bound: T,
    /// `1 - delta`.
    pub confidence: T,
    pub seg_bound: Option<T>,
    /// `1 - 3 delta`, present with `seg_bound`.
    pub seg_confidence: Option<T>,
}

pub fn bound_report<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundReport<T>> {
    inputs.validate()?;
    let seg_bound = match (inputs.lipschitz, inputs.m) {
        (Some(_), Some(_)) => Some(seg_error_bound(inputs)?),
        _ => None,
    };
    Ok(BoundReport {
        inputs: *inputs,
        branch: inputs.branch(),
        deviation: mcdiarmid_deviation(inputs.n, inputs.delta)?,
        rademacher_bound: rademacher_bound(inputs)?,
        estimation_error_bound: estimation_error_bound(inputs)?,
        empirical_gap_bound: empirical_gap_bound(inputs)?,
        confidence: T::one() - inputs.delta,
        seg_confidence: seg_bound.map(|_| T::one() - T::lit(3.0) * inputs.delta),
        seg_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    /// `C_1 = 12 (sqrt(ln 5) + 5 (sqrt(pi) / 2) erfc(sqrt(ln 5)))`, i.e.
    /// `12 e^{ln 5} Γ(3/2, ln 5)` evaluated in closed form.
    fn c1_closed_form() -> f64 {
        let s = 5f64.ln().sqrt();
        12.0 * (s + 5.0 * std::f64::consts::PI.sqrt() / 2.0 * erfc(s))
    }

    #[test]
    fn deviation_examples() {
        let v: f64 = mcdiarmid_deviation(2520, 0.05).unwrap();
        assert!((v - (20f64.ln() / 5040.0).sqrt()).abs() < 1e-15);
        assert!((v - 0.02438).abs() < 1e-5);
        let near_one: f64 = mcdiarmid_deviation(100, 1.0 - 1e-12).unwrap();
        assert!(near_one < 1e-6);
        let a: f64 = mcdiarmid_deviation(400, 0.1).unwrap();
        let b: f64 = mcdiarmid_deviation(1600, 0.1).unwrap();
        assert!((a / 2.0 - b).abs() < 1e-15);
        assert!(mcdiarmid_deviation(10, 1.0).is_err());
        assert!(mcdiarmid_deviation(0, 0.5).is_err());
    }

    #[test]
    fn dudley_constant_matches_closed_form() {
        let c1 = c1_closed_form();
        assert!((c1 - 19.0943).abs() < 1e-4, "closed form {c1}");
        let c: f64 = dudley_constant();
        assert!((c - 2.0 * c1).abs() < 1e-6, "{c} vs {}", 2.0 * c1);
        assert!((c - 38.1887).abs() < 1e-4);
    }

    #[test]
    fn dudley_quadrature_converged() {
        let coarse = 2.0 * dudley_c1_with_tol(1e-8);
        let fine = 2.0 * dudley_c1_with_tol(5e-9);
        assert!((coarse - fine).abs() < 1e-7);
    }

    #[test]
    fn rademacher_bound_examples() {
        let lip = BoundInputs::power(2520, 2, 1.0, 0.05).unwrap();
        let v = rademacher_bound(&lip).unwrap();
        assert!((v - 2.0 * (2.0 * 2f64.ln() / 2520.0).sqrt()).abs() < 1e-15);
        assert!((v - 0.04691).abs() < 1e-5);
        assert_eq!(lip.branch(), Branch::Lipschitz);

        let hol = BoundInputs::power(10_000, 3, 0.5, 0.05).unwrap();
        let v = rademacher_bound(&hol).unwrap();
        let c: f64 = dudley_constant();
        assert!((v - c * 0.02).abs() < 1e-12);
        assert!((v - 0.763).abs() < 1e-3);
        assert_eq!(hol.branch(), Branch::Holder);
    }

    #[test]
    fn rademacher_bound_monotonicity() {
        for alpha in [1.0, 0.5] {
            let base = rademacher_bound(&BoundInputs::power(1000, 5, alpha, 0.05).unwrap()).unwrap();
            let more_n = rademacher_bound(&BoundInputs::power(2000, 5, alpha, 0.05).unwrap()).unwrap();
            let more_d = rademacher_bound(&BoundInputs::power(1000, 6, alpha, 0.05).unwrap()).unwrap();
            assert!(more_n < base);
            assert!(more_d > base);
        }
    }

    #[test]
    fn bound_report_examples() {
        let inputs = BoundInputs::power(2520, 2, 1.0, 0.05).unwrap();
        let est = estimation_error_bound(&inputs).unwrap();
        assert!((est - (0.046910 + (2.0 / 2520.0 * 40f64.ln()).sqrt())).abs() < 1e-6);
        assert!((est - 0.10101).abs() < 1e-4);
        let gap = empirical_gap_bound(&inputs).unwrap();
        assert!((gap - 0.07129).abs() < 1e-4);
        assert_eq!(
            gap,
            rademacher_bound(&inputs).unwrap() + mcdiarmid_deviation(2520, 0.05).unwrap()
        );
        assert!(est >= gap);
        let huge = BoundInputs::power(1_000_000_000_000, 2, 1.0, 0.05).unwrap();
        assert!(empirical_gap_bound(&huge).unwrap() < 1e-4);
        assert!(BoundInputs::power(100, 2, 1.0, 2.0).is_err());
    }

    #[test]
    fn seg_bound_examples() {
        let inputs = BoundInputs::<f64>::power(10_000, 2, 1.0, 0.05)
            .unwrap()
            .with_seg(1.0, 1_000_000);
        let v = seg_error_bound(&inputs).unwrap();
        assert!((v - 0.06194).abs() < 1e-4, "{v}");
        let more_m = seg_error_bound(&inputs.with_seg(1.0, 4_000_000)).unwrap();
        assert!(more_m < v);
        let limit = rademacher_bound(&inputs).unwrap() + 3.0 * mcdiarmid_deviation(10_000, 0.05).unwrap();
        let far = seg_error_bound(&inputs.with_seg(1.0, usize::MAX / 2)).unwrap();
        assert!((far - limit).abs() < 1e-8);
        assert!(seg_error_bound(&BoundInputs::power(100, 2, 1.0, 0.05).unwrap()).is_err());
    }

    #[test]
    fn report_is_consistent() {
        let r = bound_report(
            &BoundInputs::<f64>::power(5000, 4, 0.5, 0.1)
                .unwrap()
                .with_seg(2.0, 1000),
        )
        .unwrap();
        assert!(r.estimation_error_bound >= r.rademacher_bound);
        assert!(r.seg_bound.unwrap() > 0.0);
        assert!((r.seg_confidence.unwrap() - 0.7).abs() < 1e-15);
        assert!((r.confidence - 0.9).abs() < 1e-15);
        let json = serde_json::to_string(&r).unwrap();
        let back: BoundReport<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn bounds_in_single_precision() {
        let v: f32 = rademacher_bound(&BoundInputs::power(2520, 2, 1.0f32, 0.05).unwrap()).unwrap();
        assert!((v - 0.04691).abs() < 1e-5);
    }
}
