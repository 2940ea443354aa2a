//! Discrete Black-Scholes return generators and log-moment estimation.
//!
//! Two models are supported:
//!
//! * a risky asset against cash, `r = (1, exp((mu - sigma^2/2)/T + sigma/sqrt(T) Z))`;
//! * `d` correlated assets whose daily log returns are i.i.d. multivariate
//!   normal with a given mean vector and covariance matrix (typically
//!   estimated from a dataset with [`estimate_log_moments`]).
//!
//! Standard normals come from `rand_distr::StandardNormal` (ziggurat) driven
//! by a [`SeedStream`]. Large simulations are cut into fixed-size blocks, each
//! with its own child stream, so results do not depend on the thread count.

mod cholesky;
mod seed;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{ReturnsMatrix, TRADING_DAYS};
use crate::numeric::pairwise_sum;
use crate::portfolio::Portfolio;

pub use cholesky::{pivoted_cholesky, LowerFactor, RELATIVE_TOL};
pub use seed::{SeedStream, SimRng};

/// Rows per independently seeded block in chunked simulations.
pub const BLOCK_ROWS: usize = 1 << 14;

/// Risky asset with annual drift `mu` and volatility `sigma`, plus cash.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarBs {
    pub mu: f64,
    pub sigma: f64,
    #[serde(default = "default_trading_days")]
    pub trading_days: usize,
}

fn default_trading_days() -> usize {
    TRADING_DAYS
}

impl ScalarBs {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self {
            mu,
            sigma,
            trading_days: TRADING_DAYS,
        }
    }

    /// The model used for the one-risky-asset experiments.
    pub fn reference() -> Self {
        Self::new(0.15, 0.45)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidSpec("mu must be finite".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidSpec("sigma must be positive".into()));
        }
        if self.trading_days == 0 {
            return Err(Error::InvalidSpec("trading_days must be at least 1".into()));
        }
        Ok(())
    }

    pub fn daily_log_mean(&self) -> f64 {
        (self.mu - 0.5 * self.sigma * self.sigma) / self.trading_days as f64
    }

    pub fn daily_log_std(&self) -> f64 {
        self.sigma / (self.trading_days as f64).sqrt()
    }
}

/// Mean vector and covariance matrix of daily log returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogMoments {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl LogMoments {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<LowerFactor> {
        let d = self.mean.len();
        if d == 0 {
            return Err(Error::InvalidSpec("empty mean vector".into()));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidSpec("mean vector has non-finite entries".into()));
        }
        if self.cov.len() != d || self.cov.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidSpec(format!("covariance must be {d} x {d}")));
        }
        if let Some(l) = &self.labels {
            if l.len() != d {
                return Err(Error::InvalidSpec("label count differs from dimension".into()));
            }
        }
        pivoted_cholesky(&self.cov)
    }
}

/// Generator parameters, serialized as `{"model": "scalar-with-cash", ...}`
/// or `{"model": "multi-asset", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum MarketSpec {
    ScalarWithCash(ScalarBs),
    MultiAsset(LogMoments),
}

impl MarketSpec {
    pub fn dim(&self) -> usize {
        match self {
            MarketSpec::ScalarWithCash(_) => 2,
            MarketSpec::MultiAsset(m) => m.dim(),
        }
    }

    pub fn sampler(&self) -> Result<RowSampler> {
        match self {
            MarketSpec::ScalarWithCash(s) => {
                s.validate()?;
                Ok(RowSampler::Scalar {
                    log_mean: s.daily_log_mean(),
                    log_std: s.daily_log_std(),
                })
            }
            MarketSpec::MultiAsset(m) => Ok(RowSampler::Multi {
                factor: m.validate()?,
                log_mean: m.mean.clone(),
            }),
        }
    }
}

/// Draws one return row at a time.
#[derive(Clone, Debug)]
pub enum RowSampler {
    Scalar { log_mean: f64, log_std: f64 },
    Multi { log_mean: Vec<f64>, factor: LowerFactor },
}

impl RowSampler {
    pub fn dim(&self) -> usize {
        match self {
            RowSampler::Scalar { .. } => 2,
            RowSampler::Multi { log_mean, .. } => log_mean.len(),
        }
    }

    /// Fills `out` with one row of price relatives. `scratch` is reused
    /// between calls to hold the standard normals.
    pub fn fill_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut Vec<f64>) {
        match self {
            RowSampler::Scalar { log_mean, log_std } => {
                let z: f64 = rng.sample(StandardNormal);
                out[0] = 1.0;
                out[1] = (log_mean + log_std * z).exp();
            }
            RowSampler::Multi { log_mean, factor } => {
                scratch.clear();
                scratch.extend((0..factor.rank()).map(|_| rng.sample::<f64, _>(StandardNormal)));
                for (i, o) in out.iter_mut().enumerate() {
                    let shock: f64 = factor.row(i).iter().zip(scratch.iter()).map(|(l, z)| l * z).sum();
                    *o = (log_mean[i] + shock).exp();
                }
            }
        }
    }

    /// `n` rows from a single stream.
    pub fn sample(&self, n: usize, seed: SeedStream) -> Result<ReturnsMatrix<f64>> {
        let d = self.dim();
        let mut values = vec![0.0; n * d];
        let mut rng = seed.rng();
        let mut scratch = Vec::with_capacity(d);
        for row in values.chunks_exact_mut(d) {
            self.fill_row(&mut rng, row, &mut scratch);
        }
        ReturnsMatrix::new(n, d, values)
    }
}

pub fn generate(spec: &MarketSpec, n: usize, seed: SeedStream) -> Result<ReturnsMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidSpec("row count must be at least 1".into()));
    }
    spec.sampler()?.sample(n, seed)
}

/// `n x 2` matrix: cash column of ones and a lognormal risky column.
pub fn gen_scalar_bs(spec: &ScalarBs, n: usize, seed: SeedStream) -> Result<ReturnsMatrix<f64>> {
    generate(&MarketSpec::ScalarWithCash(*spec), n, seed)
}

/// `n` i.i.d. rows with `ln r ~ N(mean, cov)`.
pub fn gen_multi_bs(moments: &LogMoments, n: usize, seed: SeedStream) -> Result<ReturnsMatrix<f64>> {
    let mut m = generate(&MarketSpec::MultiAsset(moments.clone()), n, seed)?;
    if let Some(labels) = &moments.labels {
        m = m.with_labels(labels.clone())?;
    }
    Ok(m)
}

/// Sample mean and covariance (divisor `n - 1`) of row-wise log returns.
pub fn estimate_log_moments(returns: &ReturnsMatrix<f64>) -> Result<LogMoments> {
    let n = returns.rows();
    let d = returns.cols();
    if n < 2 {
        return Err(Error::InvalidSpec("need at least two rows to estimate moments".into()));
    }
    let logs: Vec<f64> = returns.values().iter().map(|x| x.ln()).collect();
    let column = |j: usize| -> Vec<f64> { logs.iter().skip(j).step_by(d).copied().collect() };
    let mean: Vec<f64> = (0..d).map(|j| pairwise_sum(&column(j)) / n as f64).collect();
    let centered: Vec<Vec<f64>> = (0..d)
        .map(|j| column(j).into_iter().map(|x| x - mean[j]).collect())
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let prods: Vec<f64> = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).collect();
            let c = pairwise_sum(&prods) / (n - 1) as f64;
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    Ok(LogMoments {
        mean,
        cov,
        labels: returns.labels().map(<[String]>::to_vec),
    })
}

/// Terminal wealth after `horizon` rebalancing periods, for each portfolio on
/// the same simulated paths. Returns one vector of length `paths` per
/// portfolio, in path order.
pub fn simulate_wealth(
    spec: &MarketSpec,
    portfolios: &[Portfolio<f64>],
    paths: usize,
    horizon: usize,
    seed: SeedStream,
) -> Result<Vec<Vec<f64>>> {
    let sampler = spec.sampler()?;
    let d = sampler.dim();
    for p in portfolios {
        p.check_dim(d)?;
    }
    const PATHS_PER_BLOCK: usize = 256;
    let blocks = paths.div_ceil(PATHS_PER_BLOCK);
    let per_block: Vec<Vec<Vec<f64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = PATHS_PER_BLOCK.min(paths - b * PATHS_PER_BLOCK);
            let mut rng = seed.child(b as u64).rng();
            let mut row = vec![0.0; d];
            let mut scratch = Vec::with_capacity(d);
            let mut out = vec![Vec::with_capacity(count); portfolios.len()];
            for _ in 0..count {
                let mut log_w = vec![0.0; portfolios.len()];
                for _ in 0..horizon {
                    sampler.fill_row(&mut rng, &mut row, &mut scratch);
                    for (lw, p) in log_w.iter_mut().zip(portfolios) {
                        *lw += p.dot(&row).ln();
                    }
                }
                for (o, lw) in out.iter_mut().zip(log_w) {
                    o.push(lw.exp());
                }
            }
            out
        })
        .collect();
    let mut result = vec![Vec::with_capacity(paths); portfolios.len()];
    for block in per_block {
        for (r, b) in result.iter_mut().zip(block) {
            r.extend(b);
        }
    }
    Ok(result)
}
