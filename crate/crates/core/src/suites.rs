//! Preregistered benchmark configurations.
//!
//! Hyperparameters were fixed by a coarse manual grid search (stepsize,
//! Brownian variances) before the suites were frozen. SGNHT runs at the
//! largest grid stepsize at which it stays stable on both BLR datasets;
//! the softened samplers tolerate larger steps because their kinetic
//! gradient is bounded.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::DEFAULT_MAX_LAG;
use crate::dynamics::{run_chain, Algorithm, SamplerConfig};
use crate::error::ExperimentError;
use crate::experiment::{diagnose_trace, DiagnoseOptions, ModelSpec};
use crate::kinetics::Monomial;

pub const SUITES: [&str; 3] = ["gaussian-calibration", "multiwell", "blr"];

/// Post burn-in samples retained by the calibration runs.
pub const CALIBRATION_SAMPLES: u64 = 50_000;

/// Gradient noise injected into the calibration target.
pub const CALIBRATION_NOISE: f64 = 1.0;

/// Stationary run on the noisy 1-D standard normal with `CALIBRATION_SAMPLES`
/// samples thinned by 10.
pub fn calibration_config(algorithm: Algorithm, a: Monomial) -> SamplerConfig {
    let (h, thin, leapfrog_steps) = match algorithm {
        Algorithm::Mghmc => (0.1, 5, 5),
        _ => (0.05, 10, 10),
    };
    let n_burnin = 5_000;
    SamplerConfig {
        algorithm,
        a,
        h,
        thin,
        leapfrog_steps,
        n_burnin,
        n_iters: n_burnin + CALIBRATION_SAMPLES * thin,
        sigma_theta: 0.5,
        sigma_xi: 0.5,
        ..SamplerConfig::default()
    }
}

/// Multiwell runs: 5e4 iterations from the central mode, no burn-in.
pub fn multiwell_config(algorithm: Algorithm, a: Monomial) -> SamplerConfig {
    SamplerConfig {
        algorithm,
        a,
        h: 0.1,
        n_iters: 50_000,
        n_burnin: 0,
        sigma_theta: 1.0,
        sigma_xi: 1.0,
        sigma_p: 1.0,
        ..SamplerConfig::default()
    }
}

/// BLR runs: minibatch 16, 5000 iterations, 1000 burn-in.
pub fn blr_config(algorithm: Algorithm, a: Monomial) -> SamplerConfig {
    let base = SamplerConfig {
        algorithm,
        a,
        n_iters: 5_000,
        n_burnin: 1_000,
        ..SamplerConfig::default()
    };
    match algorithm {
        Algorithm::Sgnht => SamplerConfig { h: 0.03, diffusion: 1.0, ..base },
        Algorithm::SgmgtD => SamplerConfig {
            h: 0.3,
            sigma_theta: 0.01,
            sigma_p: 10.0,
            sigma_xi: 0.1,
            ..base
        },
        _ => SamplerConfig { h: 0.1, ..base },
    }
}

/// Bundled BLR datasets: file name and label column.
pub const BLR_DATASETS: [(&str, &str); 2] = [("pima.csv", "outcome"), ("heart.csv", "disease")];

pub fn blr_model(data_dir: &Path, file: &str, label: &str) -> ModelSpec {
    ModelSpec::Blr {
        dataset: data_dir.join(file),
        label_column: label.into(),
        test_fraction: 0.2,
        split_seed: 0,
        prior_variance: 1.0,
        minibatch: 16,
    }
}

/// The compared sampler variants: SGNHT, then SGMGT and SGMGT-D at a = 1, 2.
pub const COMPARED: [(Algorithm, Monomial); 5] = [
    (Algorithm::Sgnht, Monomial::Half),
    (Algorithm::Sgmgt, Monomial::One),
    (Algorithm::Sgmgt, Monomial::Two),
    (Algorithm::SgmgtD, Monomial::One),
    (Algorithm::SgmgtD, Monomial::Two),
];

#[derive(Clone, Debug)]
pub struct BenchEntry {
    pub target: String,
    pub model: ModelSpec,
    pub sampler: SamplerConfig,
}

pub fn suite_entries(name: &str, data_dir: &Path) -> Result<Vec<BenchEntry>, ExperimentError> {
    let entry = |target: &str, model: &ModelSpec, sampler: SamplerConfig| BenchEntry {
        target: target.into(),
        model: model.clone(),
        sampler,
    };
    match name {
        "gaussian-calibration" => {
            let model = ModelSpec::standard_gaussian(1, CALIBRATION_NOISE);
            let mut variants = vec![(Algorithm::Sgld, Monomial::Half), (Algorithm::Sghmc, Monomial::Half)];
            variants.extend(COMPARED);
            variants.push((Algorithm::Mghmc, Monomial::One));
            variants.push((Algorithm::Mghmc, Monomial::Two));
            Ok(variants
                .into_iter()
                .map(|(alg, a)| entry("gaussian", &model, calibration_config(alg, a)))
                .collect())
        }
        "multiwell" => {
            let model = ModelSpec::multiwell_default();
            Ok(COMPARED
                .into_iter()
                .map(|(alg, a)| entry("multiwell", &model, multiwell_config(alg, a)))
                .collect())
        }
        "blr" => Ok(BLR_DATASETS
            .iter()
            .flat_map(|(file, label)| {
                let model = blr_model(data_dir, file, label);
                let target = file.trim_end_matches(".csv");
                COMPARED
                    .into_iter()
                    .map(move |(alg, a)| entry(target, &model, blr_config(alg, a)))
            })
            .collect()),
        other => Err(ExperimentError::Validation(format!(
            "unknown suite `{other}` (expected one of {})",
            SUITES.join(", ")
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub suite: String,
    pub target: String,
    pub algorithm: String,
    pub a: f64,
    pub h: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub ess_median: Option<f64>,
    pub ks: Option<f64>,
    pub modes_visited: Option<usize>,
    pub auroc: Option<f64>,
    pub failure: Option<String>,
}

fn run_entry(suite: &str, e: &BenchEntry, seed: u64) -> Result<BenchRow, ExperimentError> {
    let model = e.model.build()?;
    let sampler = SamplerConfig { seed, ..e.sampler.clone() };
    let trace = run_chain(model.potential(), &sampler)?;
    let mut row = BenchRow {
        suite: suite.into(),
        target: e.target.clone(),
        algorithm: sampler.algorithm.to_string(),
        a: sampler.kinetic()?.monomial().value(),
        h: sampler.h,
        seed,
        n_samples: trace.samples.len(),
        ess_median: None,
        ks: None,
        modes_visited: None,
        auroc: None,
        failure: trace.failure.as_ref().map(ToString::to_string),
    };
    if row.failure.is_none() {
        let opts = DiagnoseOptions {
            max_lag: DEFAULT_MAX_LAG,
            ks: true,
            modes: suite == "multiwell",
            auroc: suite == "blr",
            ..DiagnoseOptions::default()
        };
        let report = diagnose_trace(&trace.samples, Some(&model), &opts)?;
        row.ess_median = Some(report.ess_median);
        row.ks = report.ks;
        row.modes_visited = report.modes_visited;
        row.auroc = report.auroc;
    }
    Ok(row)
}

/// Run every entry of a suite (in parallel) with one seed.
pub fn run_suite(name: &str, data_dir: &Path, seed: u64) -> Result<Vec<BenchRow>, ExperimentError> {
    let entries = suite_entries(name, data_dir)?;
    entries.par_iter().map(|e| run_entry(name, e, seed)).collect()
}

/// Run a suite and write `bench_<suite>.csv` into `out_dir`.
pub fn cmd_bench(name: &str, data_dir: &Path, out_dir: &Path, seed: u64) -> Result<(PathBuf, Vec<BenchRow>), ExperimentError> {
    let rows = run_suite(name, data_dir, seed)?;
    fs::create_dir_all(out_dir).map_err(|e| ExperimentError::io(out_dir, e))?;
    let path = out_dir.join(format!("bench_{name}.csv"));
    let mut w = csv::Writer::from_path(&path).map_err(crate::error::DataError::from)?;
    for row in &rows {
        w.serialize(row).map_err(crate::error::DataError::from)?;
    }
    w.flush().map_err(|e| ExperimentError::io(&path, e))?;
    let failed = rows.iter().filter(|r| r.failure.is_some()).count();
    if failed > 0 {
        return Err(ExperimentError::Diverged { failed, total: rows.len() });
    }
    Ok((path, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in SUITES {
            let entries = suite_entries(name, Path::new("data")).unwrap();
            assert!(!entries.is_empty());
            for e in entries {
                e.sampler.validate().unwrap();
            }
        }
        assert!(suite_entries("nope", Path::new("data")).is_err());
    }

    #[test]
    fn calibration_sample_count() {
        for alg in Algorithm::ALL {
            let c = calibration_config(alg, Monomial::One);
            assert_eq!((c.n_iters - c.n_burnin) / c.thin, CALIBRATION_SAMPLES);
        }
    }
}
