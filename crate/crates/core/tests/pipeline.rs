//! End-to-end runs of every experiment on synthetic inputs.

use std::fs;
use std::path::{Path, PathBuf};

use relutil_core::experiments::{run_experiment, ExperimentId, ExperimentOutput};
use relutil_core::market::{accumulated_wealth, save_returns};
use relutil_core::sim::{gen_multi_bs, LogMoments};
use relutil_core::solvers::{gdseg, GdsegConfig};
use relutil_core::{
    empirical_utility, Objective, Portfolio32, Portfolio64, Returns32, SeedStream, Utility32, Utility64,
};
use serde_json::{json, Value};

fn moments() -> LogMoments {
    LogMoments {
        mean: vec![4e-4, 1e-4, 2e-4, 0.0],
        cov: vec![
            vec![4e-4, 1e-5, 0.0, 0.0],
            vec![1e-5, 2e-4, 0.0, 0.0],
            vec![0.0, 0.0, 3e-4, 5e-5],
            vec![0.0, 0.0, 5e-5, 1e-4],
        ],
        labels: Some(["aa", "bb", "cc", "dd"].map(String::from).to_vec()),
    }
}

/// Writes a labelled synthetic returns file with a `.tickers` sidecar.
fn synthetic_dataset(dir: &Path) -> PathBuf {
    let returns = gen_multi_bs(&moments(), 400, SeedStream::new(3)).unwrap();
    let path = dir.join("synthetic.txt");
    save_returns(&returns, &path).unwrap();
    fs::write(dir.join("synthetic.tickers"), "aa bb cc dd\n").unwrap();
    path
}

fn overlays(id: ExperimentId, data: &Path) -> Value {
    let gdseg = json!({"eta_max": 1.0, "n_attempts": 200, "threshold": 1e-10});
    let portfolios = json!([
        {"name": "uniform", "holdings": "uniform"},
        {"name": "tilt", "holdings": {"weights": {"aa": 0.6, "cc": 0.4}}}
    ]);
    match id {
        ExperimentId::Table1 => json!({"alphas": [0.2, 0.5], "realizations": 4, "n": 2000}),
        ExperimentId::Fig1 => json!({"n_list": [252, 2520], "realizations": 4, "n_true": 5000}),
        ExperimentId::NyseLog => json!({"data": data, "runs": 3, "gdseg": gdseg}),
        ExperimentId::Table4 => json!({"data": data, "alphas": [0.2, 0.5], "k": 2, "gdseg": gdseg}),
        ExperimentId::Table5 => json!({"moments": moments(), "portfolios": portfolios, "paths": 2000}),
        ExperimentId::Fig2 => json!({
            "moments": moments(), "realizations": 3, "n": 300, "k": 2, "n_true": 5000, "gdseg": gdseg
        }),
        ExperimentId::BoundReport => json!({"n": 10000, "lipschitz": 1.0, "m": 1000000}),
        ExperimentId::Simulate => json!({"n": 100}),
        ExperimentId::Optimize => json!({"data": data, "k": 2, "gdseg": gdseg}),
    }
}

fn written(out: &ExperimentOutput, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = out
        .write_to(dir)
        .unwrap()
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_experiment_runs_and_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(tmp.path());
    for id in ExperimentId::ALL {
        let layer = overlays(id, &data);
        let a = run_experiment(id, true, std::slice::from_ref(&layer)).unwrap_or_else(|e| panic!("{id}: {e}"));
        let b = run_experiment(id, true, std::slice::from_ref(&layer)).unwrap();
        let fa = written(&a, &tmp.path().join(format!("{id}-a")));
        let fb = written(&b, &tmp.path().join(format!("{id}-b")));
        assert!(!fa.is_empty(), "{id} wrote nothing");
        assert_eq!(fa, fb, "{id} output differs between reruns");
        for (name, bytes) in &fa {
            let text = String::from_utf8(bytes.clone()).unwrap();
            if name.ends_with(".csv") && !name.ends_with("_trace.csv") {
                assert!(text.starts_with(&format!("# experiment={id}\n")), "{name}");
                assert!(text.contains("# params_sha256="), "{name}");
            }
            if name.ends_with(".jsonl") {
                let meta: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
                assert_eq!(meta["meta"]["experiment"], json!(id.name()), "{name}");
            }
        }
    }
}

#[test]
fn dataset_experiments_record_the_input_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(tmp.path());
    let out = run_experiment(ExperimentId::NyseLog, true, &[overlays(ExperimentId::NyseLog, &data)]).unwrap();
    let files = written(&out, tmp.path());
    let csv = files.iter().find(|(n, _)| n.ends_with(".csv")).unwrap();
    let text = String::from_utf8_lossy(&csv.1);
    assert!(text.contains("# input_sha256[data]="));
    assert!(
        text.contains("aa") || text.contains("cc"),
        "tickers should label the holdings"
    );
}

#[test]
fn changing_a_parameter_changes_the_params_hash() {
    let a = run_experiment(ExperimentId::BoundReport, false, &[json!({"n": 1000})]).unwrap();
    let b = run_experiment(ExperimentId::BoundReport, false, &[json!({"n": 1001})]).unwrap();
    assert_ne!(a.meta.params_sha256, b.meta.params_sha256);
}

#[test]
fn single_and_double_precision_agree() {
    let returns = gen_multi_bs(&moments(), 300, SeedStream::new(9)).unwrap();
    let r32: Returns32 = returns.cast();
    let nu = Portfolio64::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let nu32: Portfolio32 = nu.cast();
    let u = Utility64::power(0.3).unwrap();
    let u32 = Utility32::power(0.3).unwrap();
    for objective in [Objective::Ordinary, Objective::Relative] {
        let hi = empirical_utility(&u, &nu, &returns, objective).unwrap();
        let lo = empirical_utility(&u32, &nu32, &r32, objective).unwrap();
        assert!((hi - f64::from(lo)).abs() < 1e-5, "{objective:?}: {hi} vs {lo}");
    }
    let w64 = accumulated_wealth(&nu, &returns).unwrap();
    let w32 = accumulated_wealth(&nu32, &r32).unwrap();
    assert!((w64 / f64::from(w32) - 1.0).abs() < 1e-4);

    let cfg = GdsegConfig {
        n_attempts: 500,
        threshold: 1e-6,
        seed: SeedStream::new(2),
        ..GdsegConfig::default()
    };
    let out = gdseg(&r32, &u32, Objective::Relative, &cfg).unwrap();
    let sum: f32 = out.portfolio.weights().iter().sum();
    assert!((sum - 1.0).abs() < 1e-5);
}
