//! Command-line front end. Exit codes: 0 success, 1 parse or validation
//! error, 2 diverged chain, 3 I/O error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::ExperimentError;
use crate::experiment::{cmd_diagnose, cmd_sample, parse_experiment, DiagnoseOptions, KsTarget, ModelSpec};
use crate::suites::{cmd_bench, SUITES};

#[derive(Debug, Parser)]
#[command(name = "sgmgt", version, about = "Stochastic-gradient monomial-gamma samplers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KsModel {
    /// The model recorded in the trace's sidecar.
    Sidecar,
    /// 1-D standard normal.
    Gaussian,
    /// Default five-well mixture.
    Multiwell,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the chains of an experiment file.
    Sample {
        spec: PathBuf,
        /// Replace the seed list (repeatable).
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Replace the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute ESS, autocorrelation and fit statistics for trace files.
    Diagnose {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Count visited multiwell modes.
        #[arg(long)]
        modes: bool,
        /// Mode radius.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// KS distance to an analytic CDF.
        #[arg(long, value_enum)]
        ks: Option<KsModel>,
        /// Write a histogram of the first coordinate with this many bins.
        #[arg(long)]
        hist: Option<usize>,
        /// Test-split AUROC of a BLR trace (dataset taken from the sidecar).
        #[arg(long)]
        auroc: bool,
        #[arg(long, default_value_t = crate::diagnostics::DEFAULT_MAX_LAG)]
        max_lag: usize,
    },
    /// Run a preregistered comparison suite.
    Bench {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Directory holding the bundled CSV datasets.
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Sample { spec, seeds, out } => {
            let mut spec = parse_experiment(&spec)?;
            if !seeds.is_empty() {
                spec.seeds = seeds;
            }
            if let Some(dir) = out {
                spec.output.dir = dir;
            }
            for o in cmd_sample(&spec)? {
                println!("seed {}: {} samples -> {}", o.seed, o.n_samples, o.trace_path.display());
            }
        }
        Command::Diagnose {
            traces,
            modes,
            radius,
            ks,
            hist,
            auroc,
            max_lag,
        } => {
            let target = ks.map(|k| match k {
                KsModel::Sidecar => KsTarget::Sidecar,
                KsModel::Gaussian => KsTarget::Named(ModelSpec::standard_gaussian(1, 0.0)),
                KsModel::Multiwell => KsTarget::Named(ModelSpec::multiwell_default()),
            });
            let opts = DiagnoseOptions {
                max_lag,
                modes,
                radius,
                auroc,
                hist,
                ..DiagnoseOptions::default()
            };
            let reports = cmd_diagnose(&traces, target.as_ref(), &opts)?;
            for (path, r) in traces.iter().zip(reports) {
                println!("# {}\n{}", path.display(), r.to_key_value());
            }
        }
        Command::Bench {
            suite,
            seed,
            out,
            data_dir,
        } => {
            let (path, rows) = cmd_bench(&suite, &data_dir, &out, seed)?;
            for r in rows {
                println!(
                    "{} {} a={} ess={} ks={} modes={} auroc={}",
                    r.target,
                    r.algorithm,
                    r.a,
                    fmt_opt(r.ess_median),
                    fmt_opt(r.ks),
                    r.modes_visited.map_or("-".into(), |m| m.to_string()),
                    fmt_opt(r.auroc)
                );
            }
            println!("table -> {}", path.display());
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
