//! True (population) utility of a portfolio under a known market model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, golden_section_max, Moments};
use crate::portfolio::Portfolio;
use crate::sim::{MarketSpec, ScalarBs, SeedStream, BLOCK_ROWS};
use crate::utility::{payoff_unchecked, row_max, Objective, Utility};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueUtilityEstimate {
    pub mean: f64,
    /// Standard deviation of a single payoff sample.
    pub sample_std: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl From<Moments> for TrueUtilityEstimate {
    fn from(m: Moments) -> Self {
        Self {
            mean: m.mean,
            sample_std: m.sample_std(),
            std_error: m.std_error(),
            samples: m.count,
        }
    }
}

/// Monte-Carlo estimate of `U(nu)` from `samples` fresh rows.
pub fn mc_true_utility(
    u: &Utility<f64>,
    nu: &Portfolio<f64>,
    spec: &MarketSpec,
    samples: usize,
    seed: SeedStream,
    objective: Objective,
) -> Result<TrueUtilityEstimate> {
    Ok(mc_true_utilities(u, std::slice::from_ref(nu), spec, samples, seed, objective)?[0])
}

/// Evaluates every portfolio on one common simulated sample.
///
/// Rows are generated in blocks of [`BLOCK_ROWS`], block `b` drawn from
/// `seed.child(b)`; per-block moments are merged with a pairwise tree, so the
/// result is independent of the worker count.
pub fn mc_true_utilities(
    u: &Utility<f64>,
    portfolios: &[Portfolio<f64>],
    spec: &MarketSpec,
    samples: usize,
    seed: SeedStream,
    objective: Objective,
) -> Result<Vec<TrueUtilityEstimate>> {
    u.check_objective(objective)?;
    if samples == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    let sampler = spec.sampler()?;
    let d = sampler.dim();
    for p in portfolios {
        p.check_dim(d)?;
    }
    let blocks = samples.div_ceil(BLOCK_ROWS);
    let per_block: Vec<Vec<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK_ROWS.min(samples - b * BLOCK_ROWS);
            let block = sampler
                .sample(count, seed.child(b as u64))
                .expect("sampler produces valid rows");
            let best: Vec<f64> = block.iter_rows().map(row_max).collect();
            portfolios
                .iter()
                .map(|p| {
                    let payoffs: Vec<f64> = block
                        .iter_rows()
                        .zip(&best)
                        .map(|(row, &b)| payoff_unchecked(u, objective, p.dot(row), b))
                        .collect();
                    Moments::from_slice(&payoffs)
                })
                .collect()
        })
        .collect();
    Ok((0..portfolios.len())
        .map(|i| {
            let parts: Vec<Moments> = per_block.iter().map(|b| b[i]).collect();
            Moments::merge_all(&parts).into()
        })
        .collect())
}

const QUAD_TOL: f64 = 1e-14;
const Z_RANGE: f64 = 12.0;

/// `U(nu)` for the cash + one risky asset model, by quadrature over the
/// normal shock. `risky_weight` is the weight of the lognormal asset.
pub fn scalar_true_utility(u: &Utility<f64>, risky_weight: f64, model: &ScalarBs, objective: Objective) -> Result<f64> {
    u.check_objective(objective)?;
    model.validate()?;
    if !(0.0..=1.0).contains(&risky_weight) {
        return Err(Error::Domain(format!("risky weight {risky_weight} outside [0, 1]")));
    }
    let m = model.daily_log_mean();
    let s = model.daily_log_std();
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let integrand = |z: f64| {
        let r = (m + s * z).exp();
        let port = 1.0 + risky_weight * (r - 1.0);
        payoff_unchecked(u, objective, port, r.max(1.0)) * (-0.5 * z * z).exp() / norm
    };
    // r = 1 is a kink of max(1, r)
    let kink = (-m / s).clamp(-Z_RANGE, Z_RANGE);
    Ok(adaptive_simpson(integrand, -Z_RANGE, kink, QUAD_TOL) + adaptive_simpson(integrand, kink, Z_RANGE, QUAD_TOL))
}

/// Optimal risky weight and its true utility for the scalar model, by
/// golden-section search on the concave quadrature objective.
pub fn scalar_reference_optimum(u: &Utility<f64>, model: &ScalarBs, objective: Objective) -> Result<(f64, f64)> {
    scalar_true_utility(u, 0.0, model, objective)?;
    let f = |w: f64| scalar_true_utility(u, w, model, objective).expect("validated inputs");
    let interior = golden_section_max(f, 0.0, 1.0, 1e-9);
    let best = [0.0, interior, 1.0]
        .into_iter()
        .map(|w| (w, f(w)))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::LogMoments;

    #[test]
    fn single_asset_market_has_unit_utility() {
        let spec = MarketSpec::MultiAsset(LogMoments {
            mean: vec![1e-4],
            cov: vec![vec![4e-4]],
            labels: None,
        });
        let u = Utility::power(0.3).unwrap();
        let est = mc_true_utility(
            &u,
            &Portfolio::uniform(1),
            &spec,
            5000,
            SeedStream::new(1),
            Objective::Relative,
        )
        .unwrap();
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn estimate_is_deterministic() {
        let spec = MarketSpec::ScalarWithCash(ScalarBs::reference());
        let u = Utility::power(0.2).unwrap();
        let nu = Portfolio::new(vec![0.2, 0.8]).unwrap();
        let a = mc_true_utility(&u, &nu, &spec, 40_000, SeedStream::new(4), Objective::Relative).unwrap();
        let b = mc_true_utility(&u, &nu, &spec, 40_000, SeedStream::new(4), Objective::Relative).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_samples_stays_within_clt_band() {
        let spec = MarketSpec::ScalarWithCash(ScalarBs::reference());
        let u = Utility::power(0.2).unwrap();
        let nu = Portfolio::new(vec![0.3, 0.7]).unwrap();
        let n = 100_000;
        let a = mc_true_utility(&u, &nu, &spec, n, SeedStream::new(21), Objective::Relative).unwrap();
        let b = mc_true_utility(&u, &nu, &spec, 2 * n, SeedStream::new(21), Objective::Relative).unwrap();
        assert!((a.mean - b.mean).abs() <= 3.0 * a.sample_std / (n as f64).sqrt());
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo() {
        let model = ScalarBs::reference();
        let spec = MarketSpec::ScalarWithCash(model);
        let u = Utility::power(0.5).unwrap();
        for obj in [Objective::Relative, Objective::Ordinary] {
            let q = scalar_true_utility(&u, 0.6, &model, obj).unwrap();
            let nu = Portfolio::new(vec![0.4, 0.6]).unwrap();
            let mc = mc_true_utility(&u, &nu, &spec, 200_000, SeedStream::new(2), obj).unwrap();
            assert!((q - mc.mean).abs() < 4.0 * mc.std_error, "{obj:?}: {q} vs {}", mc.mean);
        }
    }

    #[test]
    fn cash_only_utility_is_closed_form() {
        // U((1,0)) relative = E[max(1, r)^-alpha]
        let model = ScalarBs::reference();
        let u = Utility::power(1.0).unwrap();
        let q = scalar_true_utility(&u, 0.0, &model, Objective::Ordinary).unwrap();
        assert!((q - 1.0).abs() < 1e-12);
        let q = scalar_true_utility(&u, 1.0, &model, Objective::Ordinary).unwrap();
        let expected = (model.mu / 252.0).exp();
        assert!((q - expected).abs() < 1e-12);
    }
}
