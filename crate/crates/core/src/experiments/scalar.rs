//! Experiments on the cash + one lognormal asset model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::numeric::{median, pairwise_sum};
use crate::portfolio::Portfolio;
use crate::sim::{gen_scalar_bs, MarketSpec, ScalarBs, SeedStream};
use crate::solvers::{bisect_two_asset, DEFAULT_TOL};
use crate::truth::{mc_true_utilities, scalar_reference_optimum, scalar_true_utility};
use crate::utility::{Objective, Utility};

use super::{
    histogram, histogram_rows, Cell, ExperimentId, ExperimentOutput, ExperimentParams, RecordSet, ResultTable, RunMeta,
};

/// Scale of the reported utility differences.
const UTILITY_SCALE: f64 = 1e4;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(config(format!("alpha {alpha} outside (0, 1]")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Params {
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub realizations: usize,
    pub n: usize,
    pub model: ScalarBs,
    pub tol: f64,
}

impl Default for Table1Params {
    fn default() -> Self {
        Self {
            seed: 1,
            alphas: vec![0.001, 0.01, 0.1, 0.2, 0.3, 0.5, 0.75, 0.9],
            realizations: 100,
            n: 252_000,
            model: ScalarBs::reference(),
            tol: DEFAULT_TOL,
        }
    }
}

impl ExperimentParams for Table1Params {
    const ID: ExperimentId = ExperimentId::Table1;

    fn fast() -> Self {
        Self {
            realizations: 20,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(config("alphas must not be empty"));
        }
        self.alphas.iter().try_for_each(|&a| check_alpha(a))?;
        if self.realizations == 0 || self.n == 0 {
            return Err(config("realizations and n must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(config("tol must be positive"));
        }
        self.model.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Record {
    pub realization: usize,
    pub alpha: f64,
    pub ordinary: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1Result {
    pub alphas: Vec<f64>,
    /// Mean optimal risky weight per alpha.
    pub ordinary: Vec<f64>,
    pub relative: Vec<f64>,
    pub records: Vec<Table1Record>,
}

/// Average empirically optimal risky weight under the ordinary and relative
/// power utilities. Realization `i` uses the sample drawn from
/// `seed / "table1" / i`, shared by every alpha and both objectives.
pub fn run_table1(p: &Table1Params) -> Result<Table1Result> {
    p.validate()?;
    let base = SeedStream::new(p.seed).labeled("table1");
    let per_realization: Vec<Vec<Table1Record>> = (0..p.realizations)
        .into_par_iter()
        .map(|i| {
            let sample = gen_scalar_bs(&p.model, p.n, base.child(i as u64))?;
            p.alphas
                .iter()
                .map(|&alpha| {
                    let u = Utility::power(alpha)?;
                    Ok(Table1Record {
                        realization: i,
                        alpha,
                        ordinary: bisect_two_asset(&u, &sample, Objective::Ordinary, p.tol)?,
                        relative: bisect_two_asset(&u, &sample, Objective::Relative, p.tol)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mean_of = |j: usize, pick: fn(&Table1Record) -> f64| {
        let xs: Vec<f64> = per_realization.iter().map(|r| pick(&r[j])).collect();
        pairwise_sum(&xs) / xs.len() as f64
    };
    Ok(Table1Result {
        ordinary: (0..p.alphas.len()).map(|j| mean_of(j, |r| r.ordinary)).collect(),
        relative: (0..p.alphas.len()).map(|j| mean_of(j, |r| r.relative)).collect(),
        alphas: p.alphas.clone(),
        records: per_realization.into_iter().flatten().collect(),
    })
}

impl Table1Result {
    pub fn output(&self, p: &Table1Params) -> Result<ExperimentOutput> {
        let mut out = ExperimentOutput::new(RunMeta::new(p, Some(p.seed))?);
        let mut table = ResultTable::new(
            "table1",
            std::iter::once("objective".to_owned()).chain(self.alphas.iter().map(|a| format!("alpha={a}"))),
        );
        for (name, values) in [("ordinary", &self.ordinary), ("relative", &self.relative)] {
            table.push(
                std::iter::once(Cell::from(name))
                    .chain(values.iter().map(|&v| v.into()))
                    .collect(),
            );
        }
        out.tables.push(table);
        out.records
            .push(RecordSet::from_serializable("table1_realizations", &self.records)?);
        out.summary.push(format!(
            "average optimal risky weight over {} realizations, n = {}",
            p.realizations, p.n
        ));
        for ((a, o), r) in self.alphas.iter().zip(&self.ordinary).zip(&self.relative) {
            out.summary
                .push(format!("  alpha {a:<6} ordinary {o:.4}  relative {r:.4}"));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Params {
    pub seed: u64,
    pub n_list: Vec<usize>,
    pub realizations: usize,
    pub alpha: f64,
    /// Monte-Carlo sample size for true utilities.
    pub n_true: usize,
    pub model: ScalarBs,
    pub bins: usize,
    pub tol: f64,
}

impl Default for Fig1Params {
    fn default() -> Self {
        Self {
            seed: 1,
            n_list: vec![2520, 25_200, 252_000],
            realizations: 200,
            alpha: 0.2,
            n_true: 10_000_000,
            model: ScalarBs::reference(),
            bins: 20,
            tol: DEFAULT_TOL,
        }
    }
}

impl ExperimentParams for Fig1Params {
    const ID: ExperimentId = ExperimentId::Fig1;

    fn fast() -> Self {
        Self {
            realizations: 20,
            n_true: 100_000,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(config("n_list must be non-empty with positive entries"));
        }
        if self.realizations == 0 || self.n_true == 0 || self.bins == 0 {
            return Err(config("realizations, n_true and bins must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(config("tol must be positive"));
        }
        self.model.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1Panel {
    pub n: usize,
    /// Empirically optimal risky weight per realization.
    pub weights: Vec<f64>,
    /// `(U(nu_hat) - U(w0)) * 1e4` per realization, Monte-Carlo.
    pub transformed: Vec<f64>,
    /// Fraction of realizations with weight exactly 0 or 1.
    pub extreme_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig1Result {
    /// Risky weight of the true optimum, by quadrature.
    pub reference_weight: f64,
    /// `(U(nu*) - U(w0)) * 1e4` by quadrature.
    pub reference_transformed: f64,
    /// The same quantity estimated on the Monte-Carlo sample.
    pub reference_transformed_mc: f64,
    pub panels: Vec<Fig1Panel>,
}

/// Empirically optimal weights of the relative power utility and their true
/// utilities relative to all-cash `w0 = (1, 0)`.
///
/// True utilities of all portfolios are estimated on one common sample of
/// `n_true` rows (`seed / "fig1" / "truth"`), so differences against `w0` do
/// not carry independent noise. The reference optimum is computed by
/// quadrature.
pub fn run_fig1(p: &Fig1Params) -> Result<Fig1Result> {
    p.validate()?;
    let u = Utility::power(p.alpha)?;
    let objective = Objective::Relative;
    let base = SeedStream::new(p.seed).labeled("fig1");
    let weights: Vec<Vec<f64>> = p
        .n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let panel = base.child(j as u64);
            (0..p.realizations)
                .into_par_iter()
                .map(|i| {
                    bisect_two_asset(
                        &u,
                        &gen_scalar_bs(&p.model, n, panel.child(i as u64))?,
                        objective,
                        p.tol,
                    )
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let (reference_weight, reference_value) = scalar_reference_optimum(&u, &p.model, objective)?;
    let cash_value = scalar_true_utility(&u, 0.0, &p.model, objective)?;

    let two = |w: f64| Portfolio::new(vec![1.0 - w, w]);
    let mut portfolios = vec![Portfolio::vertex(2, 0), two(reference_weight)?];
    for panel in &weights {
        for &w in panel {
            portfolios.push(two(w)?);
        }
    }
    let spec = MarketSpec::ScalarWithCash(p.model);
    let truth = mc_true_utilities(&u, &portfolios, &spec, p.n_true, base.labeled("truth"), objective)?;
    let transform = |k: usize| (truth[k].mean - truth[0].mean) * UTILITY_SCALE;

    let panels = weights
        .into_iter()
        .enumerate()
        .map(|(j, ws)| {
            let offset = 2 + j * p.realizations;
            let extreme = ws.iter().filter(|&&w| w == 0.0 || w == 1.0).count();
            Fig1Panel {
                n: p.n_list[j],
                transformed: (0..ws.len()).map(|i| transform(offset + i)).collect(),
                extreme_fraction: extreme as f64 / ws.len() as f64,
                weights: ws,
            }
        })
        .collect();
    Ok(Fig1Result {
        reference_weight,
        reference_transformed: (reference_value - cash_value) * UTILITY_SCALE,
        reference_transformed_mc: transform(1),
        panels,
    })
}

impl Fig1Result {
    pub fn output(&self, p: &Fig1Params) -> Result<ExperimentOutput> {
        let mut out = ExperimentOutput::new(RunMeta::new(p, Some(p.seed))?);
        let mut summary = ResultTable::new(
            "fig1_summary",
            [
                "n",
                "extreme_fraction",
                "mean_weight",
                "median_weight",
                "mean_transformed",
                "median_transformed",
            ],
        );
        let mut hist = ResultTable::new("fig1_histograms", ["n", "quantity", "bin_lo", "bin_hi", "count"]);
        let mut records = Vec::new();
        for panel in &self.panels {
            let mean = |xs: &[f64]| pairwise_sum(xs) / xs.len() as f64;
            summary.push(vec![
                panel.n.into(),
                panel.extreme_fraction.into(),
                mean(&panel.weights).into(),
                median(&panel.weights).into(),
                mean(&panel.transformed).into(),
                median(&panel.transformed).into(),
            ]);
            histogram_rows(
                &mut hist,
                vec![panel.n.into(), "weight".into()],
                &histogram(&panel.weights, 0.0, 1.0, p.bins),
            );
            let lo = panel.transformed.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = panel.transformed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            histogram_rows(
                &mut hist,
                vec![panel.n.into(), "transformed_utility".into()],
                &histogram(&panel.transformed, lo, hi, p.bins),
            );
            for (i, (&w, &t)) in panel.weights.iter().zip(&panel.transformed).enumerate() {
                records
                    .push(serde_json::json!({"n": panel.n, "realization": i, "weight": w, "transformed_utility": t}));
            }
        }
        let mut reference = ResultTable::new("fig1_reference", ["quantity", "value"]);
        reference.push(vec!["optimal_weight".into(), self.reference_weight.into()]);
        reference.push(vec![
            "transformed_utility_quadrature".into(),
            self.reference_transformed.into(),
        ]);
        reference.push(vec![
            "transformed_utility_mc".into(),
            self.reference_transformed_mc.into(),
        ]);
        out.tables.extend([reference, summary, hist]);
        out.records.push(RecordSet {
            name: "fig1_realizations".into(),
            records,
        });
        out.summary.push(format!(
            "reference optimum: weight {:.4}, transformed utility {:.4} (quadrature), {:.4} (Monte-Carlo, N = {})",
            self.reference_weight, self.reference_transformed, self.reference_transformed_mc, p.n_true
        ));
        for panel in &self.panels {
            out.summary.push(format!(
                "  n = {:>7}: {:.0}% of weights at 0 or 1, median transformed utility {:.4}",
                panel.n,
                100.0 * panel.extreme_fraction,
                median(&panel.transformed)
            ));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_table1() -> Table1Params {
        Table1Params {
            alphas: vec![0.2, 0.9],
            realizations: 3,
            n: 2000,
            ..Table1Params::default()
        }
    }

    #[test]
    fn table1_is_deterministic_and_ordered() {
        let p = tiny_table1();
        let a = run_table1(&p).unwrap();
        let b = run_table1(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 6);
        for r in &a.records {
            assert!(r.relative <= r.ordinary + 1e-9);
        }
        let out = a.output(&p).unwrap();
        assert_eq!(out.table("table1").unwrap().rows.len(), 2);
    }

    #[test]
    fn fig1_shapes_and_reference() {
        let p = Fig1Params {
            n_list: vec![252, 2520],
            realizations: 4,
            n_true: 20_000,
            ..Fig1Params::default()
        };
        let r = run_fig1(&p).unwrap();
        assert_eq!(r.panels.len(), 2);
        assert!(r
            .panels
            .iter()
            .all(|x| x.weights.len() == 4 && x.transformed.len() == 4));
        assert!((r.reference_weight - 0.80).abs() < 0.01);
        assert!((r.reference_transformed - 0.41).abs() < 0.01);
        let out = r.output(&p).unwrap();
        let hist = out.table("fig1_histograms").unwrap();
        assert_eq!(hist.rows.len(), 2 * 2 * p.bins);
    }
}
