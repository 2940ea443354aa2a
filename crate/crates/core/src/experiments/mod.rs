//! Experiment harness: parameter resolution, runners and result files.
//!
//! Every runner takes a parameter struct whose defaults are the full-scale
//! settings; `fast()` gives the desk-scale preset. Parameters are resolved by
//! overlaying JSON objects (a spec file, then command-line flags) on the
//! defaults. A run produces CSV tables and JSON-lines records that carry the
//! experiment id, seed, tool version and a SHA-256 of the resolved
//! parameters; wall-clock time is never written to files, so reruns are
//! byte-identical.

mod datasets;
mod nyse;
mod scalar;
mod tools;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{config, Error, Result};

pub use datasets::{data_dir, load_named_dataset, resolve_tickers, Dataset, LoadedDataset, DATA_DIR_ENV};
pub use nyse::{
    run_fig2, run_nyse_log, run_table4, run_table5, Fig2Params, Fig2Result, GdsegSettings, Holdings, NamedPortfolio,
    NyseLogParams, NyseLogResult, NyseRun, Table4Params, Table4Result, Table4Row, Table5Params, Table5Result,
    WealthStats,
};
pub use scalar::{run_fig1, run_table1, Fig1Panel, Fig1Params, Fig1Result, Table1Params, Table1Result};
pub use tools::{
    run_bound_report, run_optimize, run_simulate, BoundReportParams, OptimizeParams, SimulateParams, SolverKind,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Table1,
    Fig1,
    NyseLog,
    Table4,
    Table5,
    Fig2,
    BoundReport,
    Simulate,
    Optimize,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        Self::Table1,
        Self::Fig1,
        Self::NyseLog,
        Self::Table4,
        Self::Table5,
        Self::Fig2,
        Self::BoundReport,
        Self::Simulate,
        Self::Optimize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::Fig1 => "fig1",
            Self::NyseLog => "nyse-log",
            Self::Table4 => "table4",
            Self::Table5 => "table5",
            Self::Fig2 => "fig2",
            Self::BoundReport => "bound-report",
            Self::Simulate => "simulate",
            Self::Optimize => "optimize",
        }
    }

    /// File-name prefix of this experiment's outputs.
    pub fn file_stem(self) -> String {
        self.name().replace('-', "_")
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| config(format!("unknown experiment {s:?}")))
    }
}

/// Parameters of one experiment.
pub trait ExperimentParams: Serialize + DeserializeOwned + Default {
    const ID: ExperimentId;

    /// Desk-scale preset.
    fn fast() -> Self;

    /// Checks ranges that the type system does not.
    fn validate(&self) -> Result<()>;
}

/// Defaults (or the fast preset), with each overlay's keys replacing the
/// corresponding top-level fields in order. Unknown keys are rejected.
pub fn resolve_params<P: ExperimentParams>(fast: bool, overlays: &[Value]) -> Result<P> {
    let base = if fast { P::fast() } else { P::default() };
    let mut merged = serde_json::to_value(&base)?;
    let target = merged.as_object_mut().expect("parameter structs serialize to objects");
    for overlay in overlays {
        match overlay {
            Value::Object(map) => {
                for (k, v) in map {
                    target.insert(k.clone(), v.clone());
                }
            }
            Value::Null => {}
            _ => return Err(config("parameter overlay must be a JSON object")),
        }
    }
    let params: P = serde_json::from_value(merged).map_err(|e| config(format!("{}: {e}", P::ID)))?;
    params.validate()?;
    Ok(params)
}

/// Hex SHA-256 of the canonical JSON encoding of `params`.
pub fn params_hash<P: Serialize>(params: &P) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(params)?))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance written at the top of every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub experiment: ExperimentId,
    pub seed: Option<u64>,
    pub version: String,
    pub params_sha256: String,
    /// `(name, sha256)` of input files.
    pub inputs: Vec<(String, String)>,
}

impl RunMeta {
    pub fn new<P: ExperimentParams>(params: &P, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            experiment: P::ID,
            seed,
            version: VERSION.to_owned(),
            params_sha256: params_hash(params)?,
            inputs: Vec::new(),
        })
    }

    pub fn with_input(mut self, name: impl Into<String>, sha256: impl Into<String>) -> Self {
        self.inputs.push((name.into(), sha256.into()));
        self
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("experiment={}", self.experiment),
            format!(
                "seed={}",
                self.seed.map_or_else(|| "none".to_owned(), |s| s.to_string())
            ),
            format!("version={}", self.version),
            format!("params_sha256={}", self.params_sha256),
        ];
        for (name, hash) in &self.inputs {
            lines.push(format!("input_sha256[{name}]={hash}"));
        }
        lines
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            // shortest representation that round-trips
            Cell::Num(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(name: impl Into<String>, columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// CSV with `# key=value` metadata lines first.
    pub fn to_csv(&self, meta: &RunMeta) -> Result<String> {
        let mut out = String::new();
        for line in meta.header_lines() {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(ToString::to_string))?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
        Ok(out)
    }
}

/// Per-realization records written as JSON lines.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSet {
    pub name: String,
    pub records: Vec<Value>,
}

impl RecordSet {
    pub fn from_serializable<T: Serialize>(name: impl Into<String>, items: &[T]) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            records: items
                .iter()
                .map(serde_json::to_value)
                .collect::<serde_json::Result<_>>()?,
        })
    }

    /// The first line is `{"meta": ...}`.
    pub fn to_jsonl(&self, meta: &RunMeta) -> Result<String> {
        let mut out = serde_json::to_string(&serde_json::json!({ "meta": meta }))?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Everything a run emits.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub meta: RunMeta,
    pub tables: Vec<ResultTable>,
    pub records: Vec<RecordSet>,
    /// Raw text files, written verbatim.
    pub files: Vec<(String, String)>,
    /// Plain-text summary for standard output.
    pub summary: Vec<String>,
}

impl ExperimentOutput {
    pub fn new(meta: RunMeta) -> Self {
        Self {
            meta,
            tables: Vec::new(),
            records: Vec::new(),
            files: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<name>.csv`, `<name>.jsonl` and raw files into `dir` and
    /// returns the written paths in order.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv(&self.meta)?)?;
            written.push(path);
        }
        for r in &self.records {
            let path = dir.join(format!("{}.jsonl", r.name));
            fs::write(&path, r.to_jsonl(&self.meta)?)?;
            written.push(path);
        }
        for (name, text) in &self.files {
            let path = dir.join(name);
            fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Equal-width histogram over `[lo, hi]`; the last bin is closed.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let bins = bins.max(1);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v.is_finite() && v >= lo && v <= hi {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            (
                lo + i as f64 * width,
                if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
                c,
            )
        })
        .collect()
}

pub(crate) fn histogram_rows(table: &mut ResultTable, prefix: Vec<Cell>, hist: &[(f64, f64, usize)]) {
    for &(lo, hi, count) in hist {
        let mut row = prefix.clone();
        row.extend([Cell::Num(lo), Cell::Num(hi), Cell::from(count)]);
        table.push(row);
    }
}

fn resolve_and_run<P, F>(fast: bool, overlays: &[Value], run: F) -> Result<ExperimentOutput>
where
    P: ExperimentParams,
    F: FnOnce(&P) -> Result<ExperimentOutput>,
{
    run(&resolve_params::<P>(fast, overlays)?)
}

/// Resolves parameters for `id` and runs it.
pub fn run_experiment(id: ExperimentId, fast: bool, overlays: &[Value]) -> Result<ExperimentOutput> {
    match id {
        ExperimentId::Table1 => resolve_and_run(fast, overlays, |p: &Table1Params| run_table1(p)?.output(p)),
        ExperimentId::Fig1 => resolve_and_run(fast, overlays, |p: &Fig1Params| run_fig1(p)?.output(p)),
        ExperimentId::NyseLog => resolve_and_run(fast, overlays, |p: &NyseLogParams| run_nyse_log(p)?.output(p)),
        ExperimentId::Table4 => resolve_and_run(fast, overlays, |p: &Table4Params| run_table4(p)?.output(p)),
        ExperimentId::Table5 => resolve_and_run(fast, overlays, |p: &Table5Params| run_table5(p)?.output(p)),
        ExperimentId::Fig2 => resolve_and_run(fast, overlays, |p: &Fig2Params| run_fig2(p)?.output(p)),
        ExperimentId::BoundReport => resolve_and_run(fast, overlays, run_bound_report),
        ExperimentId::Simulate => resolve_and_run(fast, overlays, run_simulate),
        ExperimentId::Optimize => resolve_and_run(fast, overlays, run_optimize),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn ids_round_trip_through_names() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
            assert_eq!(serde_json::to_value(id).unwrap(), json!(id.name()));
        }
        assert!("table9".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn overlays_apply_in_order_and_reject_unknown_keys() {
        let p: Table1Params = resolve_params(true, &[json!({"seed": 5, "alphas": [0.2]}), json!({"seed": 7})]).unwrap();
        assert_eq!(p.seed, 7);
        assert_eq!(p.alphas, vec![0.2]);
        assert_eq!(p.realizations, Table1Params::fast().realizations);
        assert!(resolve_params::<Table1Params>(false, &[json!({"sede": 1})]).is_err());
        assert!(resolve_params::<Table1Params>(false, &[json!({"alphas": [1.5]})]).is_err());
        assert!(resolve_params::<Table1Params>(false, &[json!([1, 2])]).is_err());
    }

    #[test]
    fn params_hash_tracks_content() {
        let a = Table1Params::default();
        let mut b = a.clone();
        assert_eq!(params_hash(&a).unwrap(), params_hash(&b).unwrap());
        b.seed += 1;
        assert_ne!(params_hash(&a).unwrap(), params_hash(&b).unwrap());
        assert_eq!(params_hash(&a).unwrap().len(), 64);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_carries_metadata_and_quotes_fields() {
        let meta = RunMeta::new(&Table1Params::default(), Some(3))
            .unwrap()
            .with_input("data", "ff");
        let mut t = ResultTable::new("t", ["name", "value"]);
        t.push(vec!["a,b".into(), 0.1.into()]);
        t.push(vec!["c".into(), 2usize.into()]);
        let csv = t.to_csv(&meta).unwrap();
        assert!(csv.starts_with("# experiment=table1\n# seed=3\n"));
        assert!(csv.contains("# input_sha256[data]=ff\n"));
        assert!(csv.ends_with("name,value\n\"a,b\",0.1\nc,2\n"));
    }

    #[test]
    fn histogram_counts_every_value_once() {
        let v = [0.0, 0.1, 0.5, 0.99, 1.0, 1.0];
        let h = histogram(&v, 0.0, 1.0, 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), v.len());
        assert_eq!(h[3].1, 1.0);
        assert_eq!(h[0].2, 2);
        let flat = histogram(&[2.0, 2.0], 2.0, 2.0, 3);
        assert_eq!(flat.iter().map(|b| b.2).sum::<usize>(), 2);
    }
}
