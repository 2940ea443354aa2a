use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::market::ReturnsMatrix;
use crate::numeric::Moments;
use crate::scalar::Scalar;
use crate::sim::SeedStream;
use crate::utility::{row_max, Utility};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Monte-Carlo estimate of the Rademacher complexity of the `d` normalized
/// single-asset payoff vectors `(r_k^j / u(r_k*))_k`: the average over sign
/// draws of `max_j (1/n) sum_k eps_k r_k^j / u(r_k*)`.
///
/// Trial `t` draws its signs from `seed.child(t)`.
pub fn empirical_rademacher<T: Scalar>(
    returns: &ReturnsMatrix<T>,
    u: &Utility<T>,
    trials: usize,
    seed: SeedStream,
) -> Result<RademacherEstimate> {
    if trials == 0 {
        return Err(config("trials must be at least 1"));
    }
    u.validate()?;
    let n = returns.rows();
    let d = returns.cols();
    // column-major normalized payoffs
    let scaled: Vec<Vec<f64>> = {
        let norms: Vec<f64> = returns
            .iter_rows()
            .map(|r| u.eval(row_max(r)).map(|x| x.as_f64()))
            .collect::<Result<_>>()?;
        (0..d)
            .map(|j| {
                returns
                    .iter_rows()
                    .zip(&norms)
                    .map(|(r, &c)| r[j].as_f64() / c)
                    .collect()
            })
            .collect()
    };
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.child(t as u64).rng();
            let signs: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            scaled
                .iter()
                .map(|col| col.iter().zip(&signs).map(|(a, s)| a * s).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
                / n as f64
        })
        .collect();
    let m = Moments::from_slice(&values);
    Ok(RademacherEstimate {
        mean: m.mean,
        std_error: m.std_error(),
        trials,
    })
}

/// Massart's finite-class bound `A sqrt(2 ln d) / sqrt(n)` with
/// `A = max_k r_k* / u(r_k*)`.
pub fn massart_bound<T: Scalar>(returns: &ReturnsMatrix<T>, u: &Utility<T>) -> Result<f64> {
    u.validate()?;
    let mut a = 0.0f64;
    for r in returns.iter_rows() {
        let best = row_max(r);
        a = a.max((best / u.eval(best)?).as_f64());
    }
    let n = returns.rows() as f64;
    let d = returns.cols() as f64;
    Ok(a * (2.0 * d.ln()).sqrt() / n.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_asset_estimate_is_near_zero() {
        let rows: Vec<Vec<f64>> = (0..200).map(|k| vec![0.9 + 0.001 * k as f64]).collect();
        let r = ReturnsMatrix::from_rows(rows).unwrap();
        let u = Utility::power(0.5).unwrap();
        let trials = 4000;
        let est = empirical_rademacher(&r, &u, trials, SeedStream::new(3)).unwrap();
        let a = massart_a(&r, &u);
        assert!(est.mean.abs() <= 3.0 * a / ((200 * trials) as f64).sqrt());
        assert_eq!(massart_bound(&r, &u).unwrap(), 0.0);
    }

    fn massart_a(r: &ReturnsMatrix<f64>, u: &Utility<f64>) -> f64 {
        r.iter_rows()
            .map(|row| {
                let b = row_max(row);
                b / u.eval(b).unwrap()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identical_columns_behave_like_one_vector() {
        let r = ReturnsMatrix::new(300, 4, vec![1.0; 1200]).unwrap();
        let est = empirical_rademacher(&r, &Utility::power(1.0).unwrap(), 4000, SeedStream::new(5)).unwrap();
        assert!(est.mean.abs() <= 3.0 / ((300 * 4000) as f64).sqrt());
    }

    #[test]
    fn deterministic_given_seed() {
        let r = ReturnsMatrix::from_rows(vec![vec![1.0, 1.2], vec![0.9, 1.1], vec![1.3, 0.8]]).unwrap();
        let u = Utility::power(0.5).unwrap();
        let a = empirical_rademacher(&r, &u, 100, SeedStream::new(1)).unwrap();
        let b = empirical_rademacher(&r, &u, 100, SeedStream::new(1)).unwrap();
        assert_eq!(a, b);
        assert!(empirical_rademacher(&r, &u, 0, SeedStream::new(1)).is_err());
    }
}
