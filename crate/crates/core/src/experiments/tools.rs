//! Utility subcommands: bound calculator, return simulator, single solve.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, BoundInputs};
use crate::error::{config, Result};
use crate::market::{format_returns, PortfolioStats};
use crate::portfolio::{Portfolio, DEFAULT_PRUNE_THRESHOLD};
use crate::sim::{estimate_log_moments, generate, MarketSpec, ScalarBs, SeedStream};
use crate::solvers::{best_of_k_gdseg, bisect_two_asset, gdseg, seg_average, SegConfig, DEFAULT_TOL};
use crate::utility::{empirical_utility, Objective, Utility};

use super::{
    load_named_dataset, Cell, Dataset, ExperimentId, ExperimentOutput, ExperimentParams, GdsegSettings, ResultTable,
    RunMeta,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundReportParams {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub k: f64,
    pub a: f64,
    pub delta: f64,
    pub lipschitz: Option<f64>,
    pub m: Option<usize>,
}

impl Default for BoundReportParams {
    fn default() -> Self {
        Self {
            n: 2520,
            d: 2,
            alpha: 1.0,
            k: 1.0,
            a: 1.0,
            delta: 0.05,
            lipschitz: None,
            m: None,
        }
    }
}

impl BoundReportParams {
    pub fn inputs(&self) -> BoundInputs<f64> {
        BoundInputs {
            n: self.n,
            d: self.d,
            alpha: self.alpha,
            k: self.k,
            a: self.a,
            delta: self.delta,
            lipschitz: self.lipschitz,
            m: self.m,
        }
    }
}

impl ExperimentParams for BoundReportParams {
    const ID: ExperimentId = ExperimentId::BoundReport;

    fn fast() -> Self {
        Self::default()
    }

    fn validate(&self) -> Result<()> {
        if self.lipschitz.is_some() != self.m.is_some() {
            return Err(config("lipschitz and m must be given together"));
        }
        self.inputs().validate()
    }
}

pub fn run_bound_report(p: &BoundReportParams) -> Result<ExperimentOutput> {
    p.validate()?;
    let r = bound_report(&p.inputs())?;
    let mut out = ExperimentOutput::new(RunMeta::new(p, None)?);
    let mut table = ResultTable::new("bound_report", ["quantity", "value"]);
    let branch = match r.branch {
        crate::bounds::Branch::Lipschitz => "lipschitz",
        crate::bounds::Branch::Holder => "holder",
    };
    table.push(vec!["branch".into(), branch.into()]);
    let mut rows: Vec<(&str, f64)> = vec![
        ("deviation", r.deviation),
        ("rademacher_bound", r.rademacher_bound),
        ("estimation_error_bound", r.estimation_error_bound),
        ("empirical_gap_bound", r.empirical_gap_bound),
        ("confidence", r.confidence),
    ];
    if let (Some(b), Some(c)) = (r.seg_bound, r.seg_confidence) {
        rows.extend([("seg_bound", b), ("seg_confidence", c)]);
    }
    out.summary.push(format!(
        "n = {}, d = {}, alpha = {}, K = {}, A = {}, delta = {} ({branch} branch)",
        p.n, p.d, p.alpha, p.k, p.a, p.delta
    ));
    for (name, v) in rows {
        out.summary.push(format!("  {name:<24} {v:.6}"));
        table.push(vec![name.into(), v.into()]);
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub seed: u64,
    pub market: MarketSpec,
    pub n: usize,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            seed: 1,
            market: MarketSpec::ScalarWithCash(ScalarBs::reference()),
            n: 2520,
        }
    }
}

impl ExperimentParams for SimulateParams {
    const ID: ExperimentId = ExperimentId::Simulate;

    fn fast() -> Self {
        Self::default()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config("n must be at least 2"));
        }
        self.market.sampler().map(|_| ())
    }
}

/// Writes `simulate_returns.txt` (whitespace matrix, seeded by
/// `seed / "simulate"`) and the sample log moments.
pub fn run_simulate(p: &SimulateParams) -> Result<ExperimentOutput> {
    p.validate()?;
    let returns = generate(&p.market, p.n, SeedStream::new(p.seed).labeled("simulate"))?;
    let moments = estimate_log_moments(&returns)?;
    let mut out = ExperimentOutput::new(RunMeta::new(p, Some(p.seed))?);
    let mut table = ResultTable::new("simulate_moments", ["column", "label", "log_mean", "log_std"]);
    for j in 0..returns.cols() {
        let row: Vec<Cell> = vec![
            j.into(),
            returns.label(j).into(),
            moments.mean[j].into(),
            moments.cov[j][j].sqrt().into(),
        ];
        table.push(row);
    }
    out.summary
        .push(format!("simulated {} x {} returns", returns.rows(), returns.cols()));
    out.tables.push(table);
    out.files
        .push(("simulate_returns.txt".into(), format_returns(&returns)));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Two-asset bisection; the first column must be cash.
    Bisection,
    Gdseg,
    BestOfK,
    Seg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeParams {
    pub seed: u64,
    pub dataset: Dataset,
    pub data: Option<PathBuf>,
    pub tickers: Option<PathBuf>,
    pub solver: SolverKind,
    pub utility: Utility<f64>,
    pub objective: Objective,
    pub k: usize,
    pub m: usize,
    pub delta: f64,
    pub gdseg: GdsegSettings,
    pub tol: f64,
}

impl Default for OptimizeParams {
    fn default() -> Self {
        Self {
            seed: 1,
            dataset: Dataset::Nyse2,
            data: None,
            tickers: None,
            solver: SolverKind::BestOfK,
            utility: Utility::Power { alpha: 0.5 },
            objective: Objective::Relative,
            k: 10,
            m: 100_000,
            delta: 0.05,
            gdseg: GdsegSettings::default(),
            tol: DEFAULT_TOL,
        }
    }
}

impl ExperimentParams for OptimizeParams {
    const ID: ExperimentId = ExperimentId::Optimize;

    fn fast() -> Self {
        Self {
            k: 2,
            m: 10_000,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        self.utility.validate()?;
        self.utility.check_objective(self.objective)?;
        if self.k == 0 {
            return Err(config("k must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(config("tol must be positive"));
        }
        SegConfig {
            m: self.m,
            delta: self.delta,
        }
        .validate()?;
        self.gdseg.config(SeedStream::new(0)).validate()
    }
}

/// Solves one empirical utility maximization on a returns file.
pub fn run_optimize(p: &OptimizeParams) -> Result<ExperimentOutput> {
    p.validate()?;
    let data = load_named_dataset(p.dataset, p.data.as_deref(), p.tickers.as_deref())?;
    let returns = &data.returns;
    let seed = SeedStream::new(p.seed).labeled("optimize");
    let mut extra: Vec<(&str, f64)> = Vec::new();
    let mut trace = None;
    let portfolio = match p.solver {
        SolverKind::Bisection => {
            let w = bisect_two_asset(&p.utility, returns, p.objective, p.tol)?;
            Portfolio::new(vec![1.0 - w, w])?
        }
        SolverKind::Gdseg => {
            let run = gdseg(returns, &p.utility, p.objective, &p.gdseg.config(seed))?;
            extra.push(("attempts", run.trace.total_attempts as f64));
            trace = Some(run.trace.to_csv());
            run.portfolio.prune_and_renormalize(DEFAULT_PRUNE_THRESHOLD)?
        }
        SolverKind::BestOfK => best_of_k_gdseg(returns, &p.utility, p.objective, &p.gdseg.config(seed), p.k)?.portfolio,
        SolverKind::Seg => {
            if p.objective != Objective::Relative {
                return Err(config("SEG solves the relative objective only"));
            }
            let cfg = SegConfig { m: p.m, delta: p.delta };
            let s = seg_average(returns, &p.utility, &cfg, seed)?;
            extra.extend([
                ("eta", s.eta),
                ("lipschitz", s.lipschitz),
                ("regret", s.regret),
                ("regret_bound", s.regret_bound),
            ]);
            s.average
        }
    };
    let stats = PortfolioStats::compute(&portfolio, returns)?;
    let value = empirical_utility(&p.utility, &portfolio, returns, p.objective)?;

    let mut out = ExperimentOutput::new(RunMeta::new(p, Some(p.seed))?.with_input("data", &data.sha256));
    let mut weights = ResultTable::new("optimize_weights", ["index", "stock", "weight"]);
    for (j, &w) in portfolio.weights().iter().enumerate() {
        weights.push(vec![j.into(), returns.label(j).into(), w.into()]);
    }
    let mut summary = ResultTable::new("optimize_stats", ["quantity", "value"]);
    let mut rows = vec![
        ("empirical_utility", value),
        ("wealth", stats.wealth),
        ("annual_return", stats.annual_return),
        ("annual_volatility", stats.annual_volatility),
    ];
    rows.extend(extra);
    for (name, v) in rows {
        out.summary.push(format!("  {name:<18} {v}"));
        summary.push(vec![name.into(), v.into()]);
    }
    let held: Vec<String> = portfolio
        .support()
        .into_iter()
        .map(|j| format!("{} {:.4}", returns.label(j), portfolio.weights()[j]))
        .collect();
    out.summary.insert(0, format!("portfolio: {}", held.join(", ")));
    out.tables.extend([weights, summary]);
    if let Some(t) = trace {
        out.files.push(("optimize_trace.csv".into(), t));
    }
    Ok(out)
}
