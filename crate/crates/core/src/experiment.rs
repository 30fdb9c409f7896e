//! Experiment files, trace persistence and the `sample` / `diagnose`
//! commands.
//!
//! An experiment is a TOML document:
//!
//! ```toml
//! seeds = [1, 2, 3]
//!
//! [model]
//! kind = "multiwell"
//!
//! [sampler]
//! algorithm = "sgmgt-d"
//! a = 2
//! h = 0.1
//! n_iters = 50000
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every table is strict: a misspelled key is an error. Without `seeds` the
//! chain runs once with `sampler.seed`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{blr_auroc, ks_statistic, mode_coverage, DiagnosticsReport, Histogram, DEFAULT_MAX_LAG};
use crate::dynamics::{run_chain, ChainTrace, SamplerConfig};
use crate::error::{DataError, ExperimentError};
use crate::potentials::{
    load_dataset, noisy_gradient, Blr, Dataset, Gaussian, Multiwell, MultiwellSpec, Potential,
};

fn default_mean() -> Vec<f64> {
    vec![0.0]
}

fn one() -> f64 {
    1.0
}

fn default_centers() -> Vec<f64> {
    MultiwellSpec::default().centers
}

fn default_width() -> f64 {
    MultiwellSpec::default().width
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_minibatch() -> usize {
    16
}

fn default_label() -> String {
    "label".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Isotropic Gaussian; `noise_b` adds `N(0, 2B)` to every gradient.
    Gaussian {
        #[serde(default = "default_mean")]
        mean: Vec<f64>,
        #[serde(default = "one")]
        variance: f64,
        #[serde(default)]
        noise_b: f64,
    },
    Multiwell {
        #[serde(default = "default_centers")]
        centers: Vec<f64>,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "one")]
        noise_b: f64,
    },
    /// Bayesian logistic regression on a CSV file (path relative to the
    /// working directory).
    Blr {
        dataset: PathBuf,
        #[serde(default = "default_label")]
        label_column: String,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        split_seed: u64,
        #[serde(default = "one")]
        prior_variance: f64,
        #[serde(default = "default_minibatch")]
        minibatch: usize,
    },
}

/// A model ready for sampling, plus what diagnostics need to know about it.
pub enum BuiltModel {
    Gaussian(Box<dyn Potential>, Gaussian),
    Multiwell(Multiwell),
    Blr(Blr, Dataset),
}

impl BuiltModel {
    pub fn potential(&self) -> &dyn Potential {
        match self {
            BuiltModel::Gaussian(p, _) => p.as_ref(),
            BuiltModel::Multiwell(m) => m,
            BuiltModel::Blr(b, _) => b,
        }
    }

    /// Largest per-coordinate KS distance to the analytic marginals, when the
    /// model has them.
    pub fn ks(&self, samples: &[Vec<f64>]) -> Option<f64> {
        let coord = |d: usize| samples.iter().map(|s| s[d]).collect::<Vec<_>>();
        match self {
            BuiltModel::Gaussian(_, g) => Some(
                (0..g.mean().len())
                    .map(|d| ks_statistic(&coord(d), |x| g.marginal_cdf(d, x)))
                    .fold(0.0, f64::max),
            ),
            BuiltModel::Multiwell(m) => Some(ks_statistic(&coord(0), |x| m.cdf(x))),
            BuiltModel::Blr(..) => None,
        }
    }
}

impl ModelSpec {
    pub fn multiwell_default() -> Self {
        let d = MultiwellSpec::default();
        ModelSpec::Multiwell {
            centers: d.centers,
            width: d.width,
            noise_b: d.noise_b,
        }
    }

    /// Standard normal in `dim` dimensions with gradient noise `noise_b`.
    pub fn standard_gaussian(dim: usize, noise_b: f64) -> Self {
        ModelSpec::Gaussian {
            mean: vec![0.0; dim],
            variance: 1.0,
            noise_b,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Gaussian { .. } => "gaussian",
            ModelSpec::Multiwell { .. } => "multiwell",
            ModelSpec::Blr { .. } => "blr",
        }
    }

    pub fn load_dataset(&self) -> Result<Option<Dataset>, ExperimentError> {
        match self {
            ModelSpec::Blr {
                dataset,
                label_column,
                test_fraction,
                split_seed,
                ..
            } => Ok(Some(load_dataset(dataset, label_column, *test_fraction, *split_seed)?)),
            _ => Ok(None),
        }
    }

    pub fn build(&self) -> Result<BuiltModel, ExperimentError> {
        Ok(match self {
            ModelSpec::Gaussian { mean, variance, noise_b } => {
                let g = Gaussian::new(mean.clone(), *variance)?;
                let p: Box<dyn Potential> = if *noise_b > 0.0 {
                    Box::new(noisy_gradient(g.clone(), *noise_b)?)
                } else {
                    Box::new(g.clone())
                };
                BuiltModel::Gaussian(p, g)
            }
            ModelSpec::Multiwell { centers, width, noise_b } => BuiltModel::Multiwell(Multiwell::new(MultiwellSpec {
                centers: centers.clone(),
                width: *width,
                noise_b: *noise_b,
            })?),
            ModelSpec::Blr {
                prior_variance,
                minibatch,
                ..
            } => {
                let data = self.load_dataset()?.expect("blr model has a dataset");
                BuiltModel::Blr(Blr::new(&data, *prior_variance, *minibatch)?, data)
            }
        })
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        match self {
            ModelSpec::Gaussian { noise_b, .. } | ModelSpec::Multiwell { noise_b, .. } if !(*noise_b >= 0.0) => {
                Err(ExperimentError::Validation(format!("noise_b must be nonnegative, got {noise_b}")))
            }
            ModelSpec::Blr { dataset, .. } if !dataset.is_file() => Err(ExperimentError::io(
                dataset,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset does not exist"),
            )),
            _ => Ok(()),
        }
    }

    /// Model dimension, without reading data files for BLR.
    fn static_dim(&self) -> Option<usize> {
        match self {
            ModelSpec::Gaussian { mean, .. } => Some(mean.len()),
            ModelSpec::Multiwell { .. } => Some(1),
            ModelSpec::Blr { .. } => None,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_prefix() -> String {
    "chain".into()
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem; files are named `<prefix>_seed<seed>.*`.
    #[serde(default = "default_prefix")]
    pub prefix: String,
    /// Also write a diagnostics report next to each trace.
    #[serde(default = "yes")]
    pub report: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            prefix: default_prefix(),
            report: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub seeds: Vec<u64>,
    pub model: ModelSpec,
    pub sampler: SamplerConfig,
    pub output: OutputSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    seeds: Option<Vec<u64>>,
    model: ModelSpec,
    #[serde(default)]
    sampler: SamplerConfig,
    #[serde(default)]
    output: OutputSpec,
}

/// Parse and validate an experiment document. `origin` names the source in
/// error messages.
pub fn parse_experiment_str(text: &str, origin: &str) -> Result<ExperimentSpec, ExperimentError> {
    let raw: RawExperiment = toml::from_str(text).map_err(|e| ExperimentError::Parse {
        path: origin.to_string(),
        msg: e.to_string().trim_end().to_string(),
    })?;
    let seeds = raw.seeds.unwrap_or_else(|| vec![raw.sampler.seed]);
    let spec = ExperimentSpec {
        seeds,
        model: raw.model,
        sampler: raw.sampler,
        output: raw.output,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn parse_experiment(path: &Path) -> Result<ExperimentSpec, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    parse_experiment_str(&text, &path.display().to_string())
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.seeds.is_empty() {
            return Err(ExperimentError::Validation("at least one seed is required".into()));
        }
        self.sampler.validate()?;
        self.model.validate()?;
        if let (Some(dim), Some(init)) = (self.model.static_dim(), &self.sampler.init_theta) {
            if init.len() != dim {
                return Err(ExperimentError::Validation(format!(
                    "init_theta has {} entries but the model has dimension {dim}",
                    init.len()
                )));
            }
        }
        Ok(())
    }

    /// The single-seed spec describing one chain.
    pub fn for_seed(&self, seed: u64) -> ExperimentSpec {
        ExperimentSpec {
            seeds: vec![seed],
            sampler: SamplerConfig {
                seed,
                ..self.sampler.clone()
            },
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment specs serialize")
    }

    pub fn trace_path(&self, seed: u64) -> PathBuf {
        self.output.dir.join(format!("{}_seed{seed}.csv", self.output.prefix))
    }
}

/// Sidecar path for a trace file: same stem, `.toml` extension.
pub fn sidecar_path(trace: &Path) -> PathBuf {
    trace.with_extension("toml")
}

/// `iter,theta_0,...,theta_{D-1}[,energy]`, one row per retained sample.
pub fn write_trace(path: &Path, trace: &ChainTrace) -> Result<(), ExperimentError> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(err) => ExperimentError::io(path, err),
        other => ExperimentError::Validation(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let dim = trace.dim();
    let mut header = vec!["iter".to_string()];
    header.extend((0..dim).map(|d| format!("theta_{d}")));
    if trace.energies.is_some() {
        header.push("energy".into());
    }
    w.write_record(&header).map_err(io)?;
    for (k, sample) in trace.samples.iter().enumerate() {
        let mut rec = Vec::with_capacity(dim + 2);
        rec.push(trace.iters[k].to_string());
        rec.extend(sample.iter().map(f64::to_string));
        if let Some(e) = &trace.energies {
            rec.push(e[k].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))?;
    Ok(())
}

/// A trace read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFile {
    pub iters: Vec<u64>,
    pub samples: Vec<Vec<f64>>,
    pub energies: Option<Vec<f64>>,
}

pub fn read_trace(path: &Path) -> Result<TraceFile, DataError> {
    let shown = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let has_energy = header.last().is_some_and(|h| h == "energy");
    let dim = header.len().saturating_sub(1 + usize::from(has_energy));
    let expected: Vec<String> = std::iter::once("iter".to_string())
        .chain((0..dim).map(|d| format!("theta_{d}")))
        .chain(has_energy.then(|| "energy".to_string()))
        .collect();
    if header != expected || dim == 0 {
        return Err(DataError::Parse {
            path: shown,
            line: 1,
            msg: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = TraceFile {
        iters: Vec::new(),
        samples: Vec::new(),
        energies: has_energy.then(Vec::new),
    };
    for (row, rec) in rdr.records().enumerate() {
        let fail = |line: u64, msg: String| DataError::Parse {
            path: shown.clone(),
            line,
            msg: format!("row {row}: {msg}"),
        };
        let rec = rec.map_err(|e| fail(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let iter = rec[0]
            .parse::<u64>()
            .map_err(|_| fail(line, format!("bad iteration `{}`", &rec[0])))?;
        let mut values = Vec::with_capacity(rec.len() - 1);
        for field in rec.iter().skip(1) {
            let v = field
                .parse::<f64>()
                .map_err(|_| fail(line, format!("bad number `{field}`")))?;
            values.push(v);
        }
        if let Some(e) = out.energies.as_mut() {
            e.push(values.pop().expect("energy column present"));
        }
        out.iters.push(iter);
        out.samples.push(values);
    }
    Ok(out)
}

/// Result of one chain of [`cmd_sample`].
#[derive(Clone, Debug)]
pub struct ChainOutcome {
    pub seed: u64,
    pub trace_path: PathBuf,
    pub n_samples: usize,
    pub failure: Option<String>,
}

/// Runs one chain per seed in parallel and writes, per seed, the trace, a
/// sidecar holding the single-seed spec, and optionally a report. Fails with
/// [`ExperimentError::Diverged`] after writing everything if any chain
/// diverged.
pub fn cmd_sample(spec: &ExperimentSpec) -> Result<Vec<ChainOutcome>, ExperimentError> {
    spec.validate()?;
    let model = spec.model.build()?;
    fs::create_dir_all(&spec.output.dir).map_err(|e| ExperimentError::io(&spec.output.dir, e))?;
    let outcomes: Vec<ChainOutcome> = spec
        .seeds
        .par_iter()
        .map(|&seed| run_one(spec, &model, seed))
        .collect::<Result<_, _>>()?;
    let failed = outcomes.iter().filter(|o| o.failure.is_some()).count();
    if failed > 0 {
        return Err(ExperimentError::Diverged {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(outcomes)
}

fn run_one(spec: &ExperimentSpec, model: &BuiltModel, seed: u64) -> Result<ChainOutcome, ExperimentError> {
    let single = spec.for_seed(seed);
    let trace = run_chain(model.potential(), &single.sampler)?;
    let path = spec.trace_path(seed);
    write_trace(&path, &trace)?;

    let mut sidecar = String::new();
    if let Some(f) = &trace.failure {
        sidecar.push_str(&format!("# status: failed: {f}\n"));
    }
    sidecar.push_str(&format!(
        "# samples: {}, momentum resamples: {}, thermostat resamples: {}, accepted: {}/{}\n",
        trace.samples.len(),
        trace.momentum_resamples,
        trace.thermostat_resamples,
        trace.accepted,
        trace.proposals
    ));
    sidecar.push_str(&single.to_toml());
    let side = sidecar_path(&path);
    fs::write(&side, sidecar).map_err(|e| ExperimentError::io(&side, e))?;

    if spec.output.report && trace.failure.is_none() {
        let opts = DiagnoseOptions {
            ks: true,
            modes: matches!(model, BuiltModel::Multiwell(_)),
            auroc: matches!(model, BuiltModel::Blr(..)),
            ..DiagnoseOptions::default()
        };
        // short chains cannot support an ESS estimate; skip the report then
        if let Ok(report) = diagnose_trace(&trace.samples, Some(model), &opts) {
            write_report(&path, &report)?;
        }
    }
    Ok(ChainOutcome {
        seed,
        trace_path: path,
        n_samples: trace.samples.len(),
        failure: trace.failure.map(|f| f.to_string()),
    })
}

#[derive(Clone, Debug)]
pub struct DiagnoseOptions {
    pub max_lag: usize,
    /// KS against the model's analytic CDF.
    pub ks: bool,
    /// Mode coverage against the multiwell centers.
    pub modes: bool,
    pub radius: f64,
    /// Test-split AUROC for BLR traces.
    pub auroc: bool,
    /// Histogram bin count; written as CSV.
    pub hist: Option<usize>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            max_lag: DEFAULT_MAX_LAG,
            ks: false,
            modes: false,
            radius: 1.0,
            auroc: false,
            hist: None,
        }
    }
}

/// Report for an in-memory trace. `model` supplies the analytic CDF, the
/// mode centers or the test split the options ask for.
pub fn diagnose_trace(
    samples: &[Vec<f64>],
    model: Option<&BuiltModel>,
    opts: &DiagnoseOptions,
) -> Result<DiagnosticsReport, ExperimentError> {
    let mut report = DiagnosticsReport::from_samples(samples, opts.max_lag)?;
    if opts.ks {
        report.ks = model.and_then(|m| m.ks(samples));
    }
    if opts.modes {
        let centers = match model {
            Some(BuiltModel::Multiwell(m)) => m.spec().centers.clone(),
            _ => MultiwellSpec::default().centers,
        };
        let x: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        report.modes_visited = Some(mode_coverage(&x, &centers, opts.radius)?);
    }
    if opts.auroc {
        if let Some(BuiltModel::Blr(_, data)) = model {
            let trace = samples_as_trace(samples);
            report.auroc = Some(blr_auroc(&trace, data)?);
        }
    }
    Ok(report)
}

fn samples_as_trace(samples: &[Vec<f64>]) -> ChainTrace {
    ChainTrace {
        samples: samples.to_vec(),
        iters: (1..=samples.len() as u64).collect(),
        energies: None,
        accepted: 0,
        proposals: 0,
        momentum_resamples: 0,
        thermostat_resamples: 0,
        momentum_rejections: 0,
        config: SamplerConfig::default(),
        seed: 0,
        failure: None,
    }
}

fn write_report(trace_path: &Path, report: &DiagnosticsReport) -> Result<(), ExperimentError> {
    let txt = trace_path.with_extension("report.txt");
    fs::write(&txt, report.to_key_value()).map_err(|e| ExperimentError::io(&txt, e))?;
    let json = trace_path.with_extension("report.json");
    let body = serde_json::to_string_pretty(report).expect("reports serialize");
    fs::write(&json, body + "\n").map_err(|e| ExperimentError::io(&json, e))?;
    Ok(())
}

/// Which analytic model `--ks` compares against.
#[derive(Clone, Debug, PartialEq)]
pub enum KsTarget {
    /// Use the model recorded in the trace's sidecar.
    Sidecar,
    Named(ModelSpec),
}

/// Diagnose trace files. The model for KS, modes and AUROC comes from the
/// sidecar written by [`cmd_sample`] when present. Writes
/// `<stem>.report.txt`, `<stem>.report.json` and, with a histogram request,
/// `<stem>.hist.csv` (first coordinate). Returns the reports in input order.
pub fn cmd_diagnose(
    paths: &[PathBuf],
    ks: Option<&KsTarget>,
    opts: &DiagnoseOptions,
) -> Result<Vec<DiagnosticsReport>, ExperimentError> {
    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let trace = read_trace(path).map_err(|e| match e {
            DataError::Io(err) => ExperimentError::io(path, err),
            other => other.into(),
        })?;
        let side = sidecar_path(path);
        let sidecar_model = if side.is_file() {
            Some(parse_experiment(&side)?.model)
        } else {
            None
        };
        let model_spec = match ks {
            Some(KsTarget::Named(m)) => Some(m.clone()),
            _ => sidecar_model,
        };
        let model = model_spec.map(|m| m.build()).transpose()?;
        let opts = DiagnoseOptions {
            ks: ks.is_some(),
            ..opts.clone()
        };
        let report = diagnose_trace(&trace.samples, model.as_ref(), &opts)?;
        write_report(path, &report)?;
        if let Some(bins) = opts.hist {
            let x: Vec<f64> = trace.samples.iter().map(|s| s[0]).collect();
            let hist = Histogram::new(&x, bins)?;
            let hp = path.with_extension("hist.csv");
            let file = fs::File::create(&hp).map_err(|e| ExperimentError::io(&hp, e))?;
            hist.write_csv(file).map_err(DataError::from)?;
        }
        reports.push(report);
    }
    Ok(reports)
}
