//! Greedy doubly stochastic exponentiated gradient (GDSEG).
//!
//! Each attempt draws a row `k` and a learning rate `eta ~ U[0, eta_max]`,
//! forms the candidate `w^i ∝ nu^i exp(eta r_k^i / <nu, r_k>^(1 - alpha))`
//! and accepts it only if the full empirical utility improves by at least
//! `threshold`. The run stops after `n_attempts` consecutive rejections.
//!
//! The step exponent omits the factor `alpha` of `D_- u`; since `eta` is
//! random anyway, this only rescales the learning-rate distribution. For the
//! log utility the exponent is `eta r_k^i / <nu, r_k>`.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::market::ReturnsMatrix;
use crate::portfolio::{Portfolio, DEFAULT_PRUNE_THRESHOLD};
use crate::scalar::Scalar;
use crate::sim::SeedStream;
use crate::solvers::eg::multiplicative_update;
use crate::utility::{Objective, Utility};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdsegConfig {
    pub eta_max: f64,
    pub n_attempts: usize,
    pub threshold: f64,
    pub seed: SeedStream,
}

impl Default for GdsegConfig {
    fn default() -> Self {
        Self {
            eta_max: 1.0,
            n_attempts: 10_000,
            threshold: 1e-10,
            seed: SeedStream::new(0),
        }
    }
}

impl GdsegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_max > 0.0) || !self.eta_max.is_finite() {
            return Err(config("eta_max must be positive"));
        }
        if self.n_attempts == 0 {
            return Err(config("n_attempts must be at least 1"));
        }
        if !(self.threshold > 0.0) {
            return Err(config("threshold must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<T> {
    /// Total attempts made when this point was accepted (0 for the start).
    pub attempt: usize,
    pub objective: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace<T> {
    pub total_attempts: usize,
    /// Initial objective followed by every accepted step.
    pub history: Vec<TracePoint<T>>,
    /// Consecutive rejections at termination.
    pub final_rejections: usize,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn accepted_steps(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> T {
        self.history.last().map_or(T::nan(), |p| p.objective)
    }

    /// `step,objective` CSV, one accepted step per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,attempt,objective\n");
        for (step, p) in self.history.iter().enumerate() {
            writeln!(out, "{step},{},{:.17e}", p.attempt, p.objective.as_f64()).expect("write to string");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GdsegOutput<T> {
    pub portfolio: Portfolio<T>,
    pub trace: SolveTrace<T>,
}

/// Objective evaluator over the (possibly normalized) sample.
struct Evaluator<'a, T> {
    data: &'a ReturnsMatrix<T>,
    alpha: Option<T>,
    n: T,
}

impl<T: Scalar> Evaluator<'_, T> {
    fn objective(&self, nu: &[T]) -> T {
        let mut total = T::zero();
        for row in self.data.iter_rows() {
            let p = row.iter().zip(nu).fold(T::zero(), |a, (&x, &w)| a + x * w);
            total = total
                + match self.alpha {
                    Some(alpha) => p.powf(alpha),
                    None => p.ln(),
                };
        }
        total / self.n
    }
}

/// Runs GDSEG. Under the relative objective the rows are first divided by
/// their maximum, which turns the relative objective into the ordinary one.
pub fn gdseg<T: Scalar>(
    returns: &ReturnsMatrix<T>,
    u: &Utility<T>,
    objective: Objective,
    cfg: &GdsegConfig,
) -> Result<GdsegOutput<T>> {
    cfg.validate()?;
    u.check_objective(objective)?;
    let normalized;
    let data = if objective.is_relative() {
        normalized = returns.normalize_by_best();
        &normalized
    } else {
        returns
    };
    let d = data.cols();
    let eval = Evaluator {
        data,
        alpha: u.alpha(),
        n: T::lit(data.rows() as f64),
    };
    let mut nu = Portfolio::<T>::uniform(d);
    let mut value = eval.objective(nu.weights());
    let mut history = vec![TracePoint {
        attempt: 0,
        objective: value,
    }];
    if d == 1 {
        return Ok(GdsegOutput {
            portfolio: nu,
            trace: SolveTrace {
                total_attempts: 0,
                history,
                final_rejections: 0,
            },
        });
    }

    let exponent = match u.alpha() {
        Some(alpha) => T::one() - alpha,
        None => T::one(),
    };
    let threshold = T::lit(cfg.threshold);
    let mut rng = cfg.seed.rng();
    let mut total = 0usize;
    let mut attempt = 0usize;
    while attempt < cfg.n_attempts {
        let k = rng.random_range(0..data.rows());
        let eta = T::lit(rng.random::<f64>() * cfg.eta_max);
        let row = data.row(k);
        let scale = eta / nu.dot(row).powf(exponent);
        let w = multiplicative_update(nu.weights(), row, scale);
        attempt += 1;
        total += 1;
        let cand = eval.objective(w.weights());
        if cand >= value + threshold {
            nu = w;
            value = cand;
            attempt = 0;
            history.push(TracePoint {
                attempt: total,
                objective: value,
            });
        }
    }
    Ok(GdsegOutput {
        portfolio: nu,
        trace: SolveTrace {
            total_attempts: total,
            history,
            final_rejections: attempt,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestOfK<T> {
    /// Winning run after pruning and renormalization.
    pub portfolio: Portfolio<T>,
    /// Winning run before pruning.
    pub raw: Portfolio<T>,
    pub objective: T,
    pub run_index: usize,
    pub runs: Vec<GdsegOutput<T>>,
}

/// Seed of run `index` in [`best_of_k_gdseg`].
pub fn derived_seed(cfg: &GdsegConfig, index: usize) -> GdsegConfig {
    GdsegConfig {
        seed: cfg.seed.child(index as u64),
        ..*cfg
    }
}

/// Runs GDSEG `k` times with derived seeds and keeps the run with the
/// largest empirical utility (lowest index on ties), pruned at 0.001.
pub fn best_of_k_gdseg<T: Scalar>(
    returns: &ReturnsMatrix<T>,
    u: &Utility<T>,
    objective: Objective,
    cfg: &GdsegConfig,
    k: usize,
) -> Result<BestOfK<T>> {
    if k == 0 {
        return Err(config("k must be at least 1"));
    }
    let runs: Vec<GdsegOutput<T>> = (0..k)
        .into_par_iter()
        .map(|i| gdseg(returns, u, objective, &derived_seed(cfg, i)))
        .collect::<Result<_>>()?;
    let (run_index, best) = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, T)>, |acc, (i, r)| {
            let v = r.trace.final_objective();
            match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((i, v)),
            }
        })
        .expect("k >= 1");
    let raw = runs[run_index].portfolio.clone();
    Ok(BestOfK {
        portfolio: raw.prune_and_renormalize(T::lit(DEFAULT_PRUNE_THRESHOLD))?,
        raw,
        objective: best,
        run_index,
        runs,
    })
}
