//! Experiments on the NYSE datasets and on Black-Scholes markets whose log
//! moments are estimated from them.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::market::{PortfolioStats, ReturnsMatrix};
use crate::numeric::{median, pairwise_sum, quantile_sorted, Moments};
use crate::portfolio::{Portfolio, DEFAULT_PRUNE_THRESHOLD};
use crate::sim::{estimate_log_moments, gen_multi_bs, simulate_wealth, LogMoments, MarketSpec, SeedStream};
use crate::solvers::{best_of_k_gdseg, gdseg, GdsegConfig};
use crate::truth::mc_true_utilities;
use crate::utility::{empirical_utility, Objective, Utility};

use super::{
    histogram, histogram_rows, load_named_dataset, Cell, Dataset, ExperimentId, ExperimentOutput, ExperimentParams,
    RecordSet, ResultTable, RunMeta,
};

const UTILITY_SCALE: f64 = 1e4;

/// GDSEG settings without the seed, which each experiment derives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdsegSettings {
    pub eta_max: f64,
    pub n_attempts: usize,
    pub threshold: f64,
}

impl Default for GdsegSettings {
    fn default() -> Self {
        let d = GdsegConfig::default();
        Self {
            eta_max: d.eta_max,
            n_attempts: d.n_attempts,
            threshold: d.threshold,
        }
    }
}

impl GdsegSettings {
    pub fn config(&self, seed: SeedStream) -> GdsegConfig {
        GdsegConfig {
            eta_max: self.eta_max,
            n_attempts: self.n_attempts,
            threshold: self.threshold,
            seed,
        }
    }
}

fn label_of(labels: Option<&[String]>, j: usize) -> String {
    labels
        .and_then(|l| l.get(j))
        .cloned()
        .unwrap_or_else(|| format!("asset{j}"))
}

/// `label:weight` pairs of the nonzero weights, `;`-separated.
fn format_holdings(labels: Option<&[String]>, weights: &[f64]) -> String {
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(j, w)| format!("{}:{w}", label_of(labels, j)))
        .collect::<Vec<_>>()
        .join(";")
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(config(format!("alpha {alpha} outside (0, 1]")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NyseLogParams {
    pub seed: u64,
    pub dataset: Dataset,
    pub data: Option<PathBuf>,
    pub tickers: Option<PathBuf>,
    pub runs: usize,
    pub gdseg: GdsegSettings,
}

impl Default for NyseLogParams {
    fn default() -> Self {
        Self {
            seed: 1,
            dataset: Dataset::Nyse2,
            data: None,
            tickers: None,
            runs: 30,
            gdseg: GdsegSettings::default(),
        }
    }
}

impl ExperimentParams for NyseLogParams {
    const ID: ExperimentId = ExperimentId::NyseLog;

    fn fast() -> Self {
        Self {
            runs: 5,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(config("runs must be at least 1"));
        }
        self.gdseg.config(SeedStream::new(0)).validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NyseRun {
    pub run: usize,
    /// Pruned and renormalized weights.
    pub weights: Vec<f64>,
    pub total_attempts: usize,
    pub accepted_steps: usize,
    pub objective: f64,
    pub wealth: f64,
    pub annual_return: f64,
    pub annual_volatility: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NyseLogResult {
    pub labels: Vec<String>,
    pub data_sha256: String,
    pub runs: Vec<NyseRun>,
}

impl NyseLogResult {
    /// Columns with a nonzero weight in some run.
    pub fn survivors(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&j| self.runs.iter().any(|r| r.weights[j] > 0.0))
            .collect()
    }

    /// `[min, max]` of column `j` over runs.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        self.runs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.weights[j]), hi.max(r.weights[j]))
            })
    }

    pub fn output(&self, p: &NyseLogParams) -> Result<ExperimentOutput> {
        let meta = RunMeta::new(p, Some(p.seed))?.with_input("data", &self.data_sha256);
        let mut out = ExperimentOutput::new(meta);
        let mut weights = ResultTable::new("nyse_log_weights", ["stock", "min", "max"]);
        for j in self.survivors() {
            let (lo, hi) = self.interval(j);
            weights.push(vec![self.labels[j].clone().into(), lo.into(), hi.into()]);
        }
        let mut runs = ResultTable::new(
            "nyse_log_runs",
            [
                "run",
                "holdings",
                "attempts",
                "accepted",
                "log_utility",
                "wealth",
                "annual_return",
                "annual_volatility",
            ],
        );
        for r in &self.runs {
            runs.push(vec![
                r.run.into(),
                format_holdings(Some(&self.labels), &r.weights).into(),
                r.total_attempts.into(),
                r.accepted_steps.into(),
                r.objective.into(),
                r.wealth.into(),
                r.annual_return.into(),
                r.annual_volatility.into(),
            ]);
        }
        out.summary.push(format!("log-utility GDSEG, {} runs", self.runs.len()));
        for row in &weights.rows {
            out.summary
                .push(format!("  {:<8} [{}, {}]", row[0], fmt4(&row[1]), fmt4(&row[2])));
        }
        let attempts: Vec<f64> = self.runs.iter().map(|r| r.total_attempts as f64).collect();
        out.summary.push(format!(
            "  mean attempts {:.0}; wealth of run 0: {:.1}, annual return {:.3}",
            pairwise_sum(&attempts) / attempts.len() as f64,
            self.runs[0].wealth,
            self.runs[0].annual_return
        ));
        out.tables.extend([weights, runs]);
        out.records
            .push(RecordSet::from_serializable("nyse_log_runs", &self.runs)?);
        Ok(out)
    }
}

fn fmt4(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format!("{x:.4}"),
        other => other.to_string(),
    }
}

fn labels_or_default(returns: &ReturnsMatrix<f64>) -> Vec<String> {
    (0..returns.cols()).map(|j| returns.label(j)).collect()
}

/// Log-utility GDSEG runs; run `i` is seeded by `seed / "nyse-log" / i`.
pub fn run_nyse_log(p: &NyseLogParams) -> Result<NyseLogResult> {
    p.validate()?;
    let data = load_named_dataset(p.dataset, p.data.as_deref(), p.tickers.as_deref())?;
    let returns = &data.returns;
    let base = SeedStream::new(p.seed).labeled("nyse-log");
    let runs = (0..p.runs)
        .into_par_iter()
        .map(|i| {
            let out = gdseg(
                returns,
                &Utility::Log,
                Objective::Ordinary,
                &p.gdseg.config(base.child(i as u64)),
            )?;
            let pruned = out.portfolio.prune_and_renormalize(DEFAULT_PRUNE_THRESHOLD)?;
            let stats = PortfolioStats::compute(&pruned, returns)?;
            Ok(NyseRun {
                run: i,
                objective: out.trace.final_objective(),
                total_attempts: out.trace.total_attempts,
                accepted_steps: out.trace.accepted_steps(),
                weights: pruned.into_weights(),
                wealth: stats.wealth,
                annual_return: stats.annual_return,
                annual_volatility: stats.annual_volatility,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NyseLogResult {
        labels: labels_or_default(returns),
        data_sha256: data.sha256,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table4Params {
    pub seed: u64,
    pub dataset: Dataset,
    pub data: Option<PathBuf>,
    pub tickers: Option<PathBuf>,
    pub alphas: Vec<f64>,
    pub k: usize,
    pub gdseg: GdsegSettings,
}

impl Default for Table4Params {
    fn default() -> Self {
        Self {
            seed: 1,
            dataset: Dataset::Nyse2,
            data: None,
            tickers: None,
            alphas: vec![0.01, 0.1, 0.2, 0.3, 0.5, 0.75],
            k: 10,
            gdseg: GdsegSettings::default(),
        }
    }
}

impl ExperimentParams for Table4Params {
    const ID: ExperimentId = ExperimentId::Table4;

    fn fast() -> Self {
        Self {
            k: 2,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.k == 0 {
            return Err(config("alphas must be non-empty and k at least 1"));
        }
        self.alphas.iter().try_for_each(|&a| check_alpha(a))?;
        self.gdseg.config(SeedStream::new(0)).validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table4Row {
    pub alpha: f64,
    pub objective: Objective,
    pub weights: Vec<f64>,
    pub empirical_utility: f64,
    pub wealth: f64,
    pub annual_return: f64,
    pub annual_volatility: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table4Result {
    pub labels: Vec<String>,
    pub data_sha256: String,
    pub rows: Vec<Table4Row>,
}

impl Table4Result {
    pub fn row(&self, alpha: f64, objective: Objective) -> Option<&Table4Row> {
        self.rows.iter().find(|r| r.alpha == alpha && r.objective == objective)
    }

    pub fn output(&self, p: &Table4Params) -> Result<ExperimentOutput> {
        let meta = RunMeta::new(p, Some(p.seed))?.with_input("data", &self.data_sha256);
        let mut out = ExperimentOutput::new(meta);
        let mut table = ResultTable::new(
            "table4",
            [
                "alpha",
                "objective",
                "holdings",
                "empirical_utility",
                "wealth",
                "annual_return",
                "annual_volatility",
            ],
        );
        out.summary.push(format!("best of {} GDSEG runs per cell", p.k));
        for r in &self.rows {
            let holdings = format_holdings(Some(&self.labels), &r.weights);
            out.summary.push(format!(
                "  alpha {:<5} {:<8} X_n {:>8.1}  ann. ret {:.3}  ann. vol {:.3}  {}",
                r.alpha,
                r.objective.name(),
                r.wealth,
                r.annual_return,
                r.annual_volatility,
                holdings
            ));
            table.push(vec![
                r.alpha.into(),
                r.objective.name().into(),
                holdings.into(),
                r.empirical_utility.into(),
                r.wealth.into(),
                r.annual_return.into(),
                r.annual_volatility.into(),
            ]);
        }
        out.tables.push(table);
        Ok(out)
    }
}

/// Best-of-k GDSEG portfolios for each alpha and objective. Cell
/// `(alpha_i, objective_j)` is seeded by `seed / "table4" / i / j`.
pub fn run_table4(p: &Table4Params) -> Result<Table4Result> {
    p.validate()?;
    let data = load_named_dataset(p.dataset, p.data.as_deref(), p.tickers.as_deref())?;
    let returns = &data.returns;
    let base = SeedStream::new(p.seed).labeled("table4");
    let cells: Vec<(usize, usize)> = (0..p.alphas.len()).flat_map(|i| [(i, 0), (i, 1)]).collect();
    let rows = cells
        .into_par_iter()
        .map(|(i, j)| {
            let alpha = p.alphas[i];
            let objective = [Objective::Ordinary, Objective::Relative][j];
            let u = Utility::power(alpha)?;
            let cfg = p.gdseg.config(base.child(i as u64).child(j as u64));
            let best = best_of_k_gdseg(returns, &u, objective, &cfg, p.k)?;
            let stats = PortfolioStats::compute(&best.portfolio, returns)?;
            Ok(Table4Row {
                alpha,
                objective,
                empirical_utility: empirical_utility(&u, &best.portfolio, returns, objective)?,
                weights: best.portfolio.into_weights(),
                wealth: stats.wealth,
                annual_return: stats.annual_return,
                annual_volatility: stats.annual_volatility,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Table4Result {
        labels: labels_or_default(returns),
        data_sha256: data.sha256,
        rows,
    })
}

/// Portfolio given by name: uniform, or weights keyed by ticker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Holdings {
    Uniform,
    Weights(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPortfolio {
    pub name: String,
    pub holdings: Holdings,
}

impl NamedPortfolio {
    fn weights(name: &str, pairs: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_owned(),
            holdings: Holdings::Weights(pairs.iter().map(|&(k, v)| (k.to_owned(), v)).collect()),
        }
    }

    /// Resolves the holdings against column labels; weights are renormalized
    /// to absorb rounding in the inputs.
    pub fn resolve(&self, labels: &[String]) -> Result<Portfolio<f64>> {
        match &self.holdings {
            Holdings::Uniform => Ok(Portfolio::uniform(labels.len())),
            Holdings::Weights(map) => {
                let mut w = vec![0.0; labels.len()];
                for (name, &x) in map {
                    let j = labels
                        .iter()
                        .position(|l| l == name)
                        .ok_or_else(|| config(format!("portfolio {:?}: unknown stock {name:?}", self.name)))?;
                    w[j] = x;
                }
                Portfolio::from_unnormalized(w)
            }
        }
    }
}

/// The uniform and log-optimal portfolios and the Table 4 portfolios of the
/// NYSE2 dataset.
fn default_table5_portfolios() -> Vec<NamedPortfolio> {
    let three = |name: &str, hp: f64, morris: f64, schlum: f64| {
        NamedPortfolio::weights(name, &[("hp", hp), ("morris", morris), ("schlum", schlum)])
    };
    let two = |name: &str, hp: f64, morris: f64| NamedPortfolio::weights(name, &[("hp", hp), ("morris", morris)]);
    vec![
        NamedPortfolio {
            name: "uniform".into(),
            holdings: Holdings::Uniform,
        },
        three("log-optimal", 0.177, 0.747, 0.076),
        three("alpha=0.01 ordinary", 0.1792, 0.7518, 0.0690),
        three("alpha=0.01 relative", 0.1782, 0.7523, 0.0695),
        three("alpha=0.1 ordinary", 0.1762, 0.7766, 0.0473),
        three("alpha=0.1 relative", 0.1617, 0.7882, 0.0501),
        two("alpha=0.2 ordinary", 0.1779, 0.8221),
        two("alpha=0.2 relative", 0.1476, 0.8524),
        two("alpha=0.3 ordinary", 0.1589, 0.8411),
        two("alpha=0.3 relative", 0.1069, 0.8931),
        two("alpha=0.5 ordinary", 0.0972, 0.9028),
        NamedPortfolio::weights("alpha=0.5 relative", &[("morris", 1.0)]),
    ]
}

/// Log moments from the parameters when given, else estimated from the dataset.
/// Returns the dataset hash when the dataset was read.
fn market_moments(
    moments: &Option<LogMoments>,
    dataset: Dataset,
    data: Option<&std::path::Path>,
    tickers: Option<&std::path::Path>,
) -> Result<(LogMoments, Option<String>)> {
    match moments {
        Some(m) => {
            m.validate()?;
            Ok((m.clone(), None))
        }
        None => {
            let loaded = load_named_dataset(dataset, data, tickers)?;
            let mut m = estimate_log_moments(&loaded.returns)?;
            m.labels = Some(labels_or_default(&loaded.returns));
            Ok((m, Some(loaded.sha256)))
        }
    }
}

fn moment_labels(m: &LogMoments) -> Vec<String> {
    (0..m.dim()).map(|j| label_of(m.labels.as_deref(), j)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table5Params {
    pub seed: u64,
    pub dataset: Dataset,
    pub data: Option<PathBuf>,
    pub tickers: Option<PathBuf>,
    /// Used instead of the dataset when present.
    pub moments: Option<LogMoments>,
    pub portfolios: Vec<NamedPortfolio>,
    pub paths: usize,
    pub horizon: usize,
}

impl Default for Table5Params {
    fn default() -> Self {
        Self {
            seed: 1,
            dataset: Dataset::Nyse2,
            data: None,
            tickers: None,
            moments: None,
            portfolios: default_table5_portfolios(),
            paths: 1_000_000,
            horizon: 252,
        }
    }
}

impl ExperimentParams for Table5Params {
    const ID: ExperimentId = ExperimentId::Table5;

    fn fast() -> Self {
        Self {
            paths: 100_000,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.paths < 2 || self.horizon == 0 {
            return Err(config("paths must be at least 2 and horizon at least 1"));
        }
        if self.portfolios.is_empty() {
            return Err(config("portfolios must not be empty"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WealthStats {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub p05: f64,
    pub p95: f64,
}

impl WealthStats {
    pub fn from_samples(name: &str, xs: &[f64]) -> Self {
        let m = Moments::from_slice(xs);
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            name: name.to_owned(),
            mean: m.mean,
            median: quantile_sorted(&sorted, 0.5),
            std: m.sample_std(),
            p05: quantile_sorted(&sorted, 0.05),
            p95: quantile_sorted(&sorted, 0.95),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table5Result {
    pub data_sha256: Option<String>,
    pub rows: Vec<WealthStats>,
}

impl Table5Result {
    pub fn row(&self, name: &str) -> Option<&WealthStats> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn output(&self, p: &Table5Params) -> Result<ExperimentOutput> {
        let mut meta = RunMeta::new(p, Some(p.seed))?;
        if let Some(h) = &self.data_sha256 {
            meta = meta.with_input("data", h);
        }
        let mut out = ExperimentOutput::new(meta);
        let mut table = ResultTable::new("table5", ["portfolio", "mean", "median", "std", "p05", "p95"]);
        out.summary.push(format!(
            "terminal wealth after {} days over {} paths",
            p.horizon, p.paths
        ));
        for r in &self.rows {
            table.push(vec![
                r.name.clone().into(),
                r.mean.into(),
                r.median.into(),
                r.std.into(),
                r.p05.into(),
                r.p95.into(),
            ]);
            out.summary.push(format!(
                "  {:<20} mean {:.3}  median {:.3}  std {:.3}  5% {:.3}  95% {:.3}",
                r.name, r.mean, r.median, r.std, r.p05, r.p95
            ));
        }
        out.tables.push(table);
        Ok(out)
    }
}

/// Terminal-wealth statistics on common simulated paths, seeded by
/// `seed / "table5"`.
pub fn run_table5(p: &Table5Params) -> Result<Table5Result> {
    p.validate()?;
    let (moments, data_sha256) = market_moments(&p.moments, p.dataset, p.data.as_deref(), p.tickers.as_deref())?;
    let labels = moment_labels(&moments);
    let portfolios: Vec<Portfolio<f64>> = p
        .portfolios
        .iter()
        .map(|np| np.resolve(&labels))
        .collect::<Result<_>>()?;
    let spec = MarketSpec::MultiAsset(moments);
    let wealth = simulate_wealth(
        &spec,
        &portfolios,
        p.paths,
        p.horizon,
        SeedStream::new(p.seed).labeled("table5"),
    )?;
    Ok(Table5Result {
        data_sha256,
        rows: p
            .portfolios
            .iter()
            .zip(&wealth)
            .map(|(np, xs)| WealthStats::from_samples(&np.name, xs))
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2Params {
    pub seed: u64,
    pub dataset: Dataset,
    pub data: Option<PathBuf>,
    pub tickers: Option<PathBuf>,
    pub moments: Option<LogMoments>,
    pub realizations: usize,
    pub alpha: f64,
    pub n: usize,
    pub k: usize,
    pub n_true: usize,
    pub gdseg: GdsegSettings,
    pub bins: usize,
}

impl Default for Fig2Params {
    fn default() -> Self {
        Self {
            seed: 1,
            dataset: Dataset::Nyse2,
            data: None,
            tickers: None,
            moments: None,
            realizations: 200,
            alpha: 0.2,
            n: 11_178,
            k: 10,
            n_true: 10_000_000,
            gdseg: GdsegSettings::default(),
            bins: 20,
        }
    }
}

impl ExperimentParams for Fig2Params {
    const ID: ExperimentId = ExperimentId::Fig2;

    fn fast() -> Self {
        Self {
            realizations: 20,
            n_true: 100_000,
            k: 3,
            gdseg: GdsegSettings {
                n_attempts: 1000,
                ..GdsegSettings::default()
            },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.realizations == 0 || self.n == 0 || self.k == 0 || self.n_true == 0 || self.bins == 0 {
            return Err(config("realizations, n, k, n_true and bins must be at least 1"));
        }
        self.gdseg.config(SeedStream::new(0)).validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Result {
    pub labels: Vec<String>,
    pub data_sha256: Option<String>,
    /// Pruned best-of-k portfolio per realization.
    pub portfolios: Vec<Vec<f64>>,
    pub average_weights: Vec<f64>,
    /// Relative true utility per realization.
    pub true_utilities: Vec<f64>,
    pub uniform_utility: f64,
    /// `(U(nu_hat) - U(uniform)) * 1e4` per realization.
    pub transformed: Vec<f64>,
}

impl Fig2Result {
    /// Column indices by decreasing average weight (lowest index on ties).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.average_weights.len()).collect();
        idx.sort_by(|&a, &b| {
            self.average_weights[b]
                .total_cmp(&self.average_weights[a])
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn supports(&self) -> Vec<usize> {
        self.portfolios
            .iter()
            .map(|w| w.iter().filter(|&&x| x > 0.0).count())
            .collect()
    }

    pub fn output(&self, p: &Fig2Params) -> Result<ExperimentOutput> {
        let mut meta = RunMeta::new(p, Some(p.seed))?;
        if let Some(h) = &self.data_sha256 {
            meta = meta.with_input("data", h);
        }
        let mut out = ExperimentOutput::new(meta);
        let mut avg = ResultTable::new("fig2_average_weights", ["index", "stock", "average_weight", "rank"]);
        let ranking = self.ranking();
        for (j, (label, &w)) in self.labels.iter().zip(&self.average_weights).enumerate() {
            let rank = ranking.iter().position(|&r| r == j).expect("ranking is a permutation") + 1;
            avg.push(vec![j.into(), label.clone().into(), w.into(), rank.into()]);
        }
        let lo = self.transformed.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.transformed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut hist = ResultTable::new("fig2_histogram", ["quantity", "bin_lo", "bin_hi", "count"]);
        histogram_rows(
            &mut hist,
            vec!["transformed_utility".into()],
            &histogram(&self.transformed, lo, hi, p.bins),
        );
        let supports = self.supports();
        let records = (0..self.portfolios.len())
            .map(|i| {
                serde_json::json!({
                    "realization": i,
                    "holdings": format_holdings(Some(&self.labels), &self.portfolios[i]),
                    "support": supports[i],
                    "true_utility": self.true_utilities[i],
                    "transformed_utility": self.transformed[i],
                })
            })
            .collect();
        let mean = pairwise_sum(&self.transformed) / self.transformed.len() as f64;
        let top: Vec<String> = ranking
            .iter()
            .take(5)
            .map(|&j| format!("{j} ({})", self.labels[j]))
            .collect();
        out.summary.push(format!("top average weights: {}", top.join(", ")));
        out.summary.push(format!(
            "transformed true utility (U - U(uniform)) * 1e4: median {:.4}, mean {:.4}; support sizes {}..{}",
            median(&self.transformed),
            mean,
            supports.iter().min().copied().unwrap_or(0),
            supports.iter().max().copied().unwrap_or(0)
        ));
        out.tables.extend([avg, hist]);
        out.records.push(RecordSet {
            name: "fig2_realizations".into(),
            records,
        });
        Ok(out)
    }
}

/// Best-of-k GDSEG portfolios of the relative power utility on simulated
/// trajectories, and their true utilities. Realization `i` draws its
/// trajectory from `seed / "fig2" / i` and its GDSEG runs from
/// `seed / "fig2" / "gdseg" / i`; all true utilities share the sample
/// `seed / "fig2" / "truth"`.
pub fn run_fig2(p: &Fig2Params) -> Result<Fig2Result> {
    p.validate()?;
    let (moments, data_sha256) = market_moments(&p.moments, p.dataset, p.data.as_deref(), p.tickers.as_deref())?;
    let labels = moment_labels(&moments);
    let u = Utility::power(p.alpha)?;
    let base = SeedStream::new(p.seed).labeled("fig2");
    let solver = base.labeled("gdseg");
    let portfolios: Vec<Portfolio<f64>> = (0..p.realizations)
        .into_par_iter()
        .map(|i| {
            let sample = gen_multi_bs(&moments, p.n, base.child(i as u64))?;
            let best = best_of_k_gdseg(
                &sample,
                &u,
                Objective::Relative,
                &p.gdseg.config(solver.child(i as u64)),
                p.k,
            )?;
            Ok(best.portfolio)
        })
        .collect::<Result<_>>()?;
    let d = labels.len();
    let average_weights = (0..d)
        .map(|j| {
            let col: Vec<f64> = portfolios.iter().map(|w| w.weights()[j]).collect();
            pairwise_sum(&col) / col.len() as f64
        })
        .collect();
    let mut evaluated = vec![Portfolio::uniform(d)];
    evaluated.extend(portfolios.iter().cloned());
    let spec = MarketSpec::MultiAsset(moments);
    let truth = mc_true_utilities(
        &u,
        &evaluated,
        &spec,
        p.n_true,
        base.labeled("truth"),
        Objective::Relative,
    )?;
    let uniform_utility = truth[0].mean;
    let true_utilities: Vec<f64> = truth[1..].iter().map(|t| t.mean).collect();
    Ok(Fig2Result {
        transformed: true_utilities
            .iter()
            .map(|v| (v - uniform_utility) * UTILITY_SCALE)
            .collect(),
        labels,
        data_sha256,
        portfolios: portfolios.into_iter().map(Portfolio::into_weights).collect(),
        average_weights,
        true_utilities,
        uniform_utility,
    })
}
