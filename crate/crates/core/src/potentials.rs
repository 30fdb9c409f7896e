//! Target models.
//!
//! A [`Potential`] is a negative log density `U(theta)` with an exact
//! gradient and an unbiased stochastic gradient. The stochastic gradient of
//! [`Blr`] subsamples the training rows and rescales the likelihood part by
//! `N / N'`; the synthetic targets inject Gaussian noise of variance `2B`
//! instead.

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{DataError, SamplerError};
use crate::kinetics::{log1p_exp, sigmoid};

pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    /// `U(theta)`.
    fn energy(&self, theta: &[f64]) -> f64;

    /// Exact gradient of `U`.
    fn grad(&self, theta: &[f64]) -> Vec<f64>;

    /// Unbiased estimate of [`Potential::grad`].
    fn stoch_grad(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, theta: &[f64]) -> f64 {
        (**self).energy(theta)
    }
    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        (**self).grad(theta)
    }
    fn stoch_grad(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        (**self).stoch_grad(theta, rng)
    }
}

impl<P: Potential + ?Sized> Potential for Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, theta: &[f64]) -> f64 {
        (**self).energy(theta)
    }
    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        (**self).grad(theta)
    }
    fn stoch_grad(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        (**self).stoch_grad(theta, rng)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Isotropic Gaussian `U = sum_d (theta_d - mean_d)^2 / (2 variance)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    mean: Vec<f64>,
    variance: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, variance: f64) -> Result<Self, SamplerError> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "gaussian variance must be positive, got {variance}"
            )));
        }
        if mean.is_empty() {
            return Err(SamplerError::InvalidConfig("gaussian mean is empty".into()));
        }
        Ok(Gaussian { mean, variance })
    }

    pub fn standard(dim: usize) -> Self {
        Gaussian {
            mean: vec![0.0; dim],
            variance: 1.0,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Marginal CDF of coordinate `d`.
    pub fn marginal_cdf(&self, d: usize, x: f64) -> f64 {
        normal_cdf((x - self.mean[d]) / self.variance.sqrt())
    }
}

/// Shorthand for [`Gaussian::new`].
pub fn gaussian_potential(mean: Vec<f64>, variance: f64) -> Result<Gaussian, SamplerError> {
    Gaussian::new(mean, variance)
}

impl Potential for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| (t - m) * (t - m))
            .sum::<f64>()
            / (2.0 * self.variance)
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| (t - m) / self.variance)
            .collect()
    }

    fn stoch_grad(&self, theta: &[f64], _rng: &mut dyn RngCore) -> Vec<f64> {
        self.grad(theta)
    }
}

/// Wraps a model so that its stochastic gradient is the exact gradient plus
/// independent `N(0, 2B)` noise per coordinate. Draws one standard normal
/// per coordinate when `B > 0` and nothing otherwise.
#[derive(Clone, Debug)]
pub struct NoisyGradient<P> {
    base: P,
    b: f64,
}

impl<P: Potential> NoisyGradient<P> {
    pub fn new(base: P, b: f64) -> Result<Self, SamplerError> {
        if !(b.is_finite() && b >= 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "gradient noise B must be nonnegative, got {b}"
            )));
        }
        Ok(NoisyGradient { base, b })
    }

    pub fn base(&self) -> &P {
        &self.base
    }

    pub fn noise(&self) -> f64 {
        self.b
    }
}

/// Shorthand for [`NoisyGradient::new`].
pub fn noisy_gradient<P: Potential>(base: P, b: f64) -> Result<NoisyGradient<P>, SamplerError> {
    NoisyGradient::new(base, b)
}

fn add_gradient_noise(g: &mut [f64], b: f64, rng: &mut dyn RngCore) {
    if b > 0.0 {
        let scale = (2.0 * b).sqrt();
        for v in g.iter_mut() {
            *v += scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

impl<P: Potential> Potential for NoisyGradient<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        self.base.energy(theta)
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        self.base.grad(theta)
    }

    fn stoch_grad(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let mut g = self.base.grad(theta);
        add_gradient_noise(&mut g, self.b, rng);
        g
    }
}

/// Equal-weight one-dimensional Gaussian mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiwellSpec {
    pub centers: Vec<f64>,
    pub width: f64,
    pub noise_b: f64,
}

impl Default for MultiwellSpec {
    fn default() -> Self {
        MultiwellSpec {
            centers: vec![-8.0, -4.0, 0.0, 4.0, 8.0],
            width: 0.8,
            noise_b: 1.0,
        }
    }
}

impl MultiwellSpec {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.centers.is_empty() {
            return Err(SamplerError::InvalidConfig("multiwell needs at least one center".into()));
        }
        if self.centers.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SamplerError::InvalidConfig(
                "multiwell centers must be strictly increasing".into(),
            ));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "multiwell width must be positive, got {}",
                self.width
            )));
        }
        if !(self.noise_b.is_finite() && self.noise_b >= 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "multiwell noise_b must be nonnegative, got {}",
                self.noise_b
            )));
        }
        Ok(())
    }
}

/// `U(theta) = -log sum_i exp(-(theta - mu_i)^2 / (2 width^2))`.
#[derive(Clone, Debug)]
pub struct Multiwell {
    spec: MultiwellSpec,
}

impl Multiwell {
    pub fn new(spec: MultiwellSpec) -> Result<Self, SamplerError> {
        spec.validate()?;
        Ok(Multiwell { spec })
    }

    pub fn spec(&self) -> &MultiwellSpec {
        &self.spec
    }

    /// CDF of the normalized density `exp(-U) / Z`.
    pub fn cdf(&self, x: f64) -> f64 {
        let w = self.spec.width;
        self.spec
            .centers
            .iter()
            .map(|m| normal_cdf((x - m) / w))
            .sum::<f64>()
            / self.spec.centers.len() as f64
    }

    fn exponents(&self, x: f64) -> impl Iterator<Item = f64> + '_ {
        let two_w2 = 2.0 * self.spec.width * self.spec.width;
        self.spec.centers.iter().map(move |m| -(x - m) * (x - m) / two_w2)
    }
}

/// Shorthand for [`Multiwell::new`].
pub fn multiwell_potential(spec: MultiwellSpec) -> Result<Multiwell, SamplerError> {
    Multiwell::new(spec)
}

impl Potential for Multiwell {
    fn dim(&self) -> usize {
        1
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        let max = self.exponents(theta[0]).fold(f64::NEG_INFINITY, f64::max);
        -(max + self.exponents(theta[0]).map(|e| (e - max).exp()).sum::<f64>().ln())
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        let x = theta[0];
        let max = self.exponents(x).fold(f64::NEG_INFINITY, f64::max);
        let w2 = self.spec.width * self.spec.width;
        let (mut num, mut den) = (0.0, 0.0);
        for (e, m) in self.exponents(x).zip(&self.spec.centers) {
            let weight = (e - max).exp();
            num += weight * (x - m);
            den += weight;
        }
        vec![num / (den * w2)]
    }

    fn stoch_grad(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let mut g = self.grad(theta);
        add_gradient_noise(&mut g, self.spec.noise_b, rng);
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Standardized binary-classification data with a seeded train/test split.
///
/// Feature columns are standardized with the training-split mean and
/// (population) standard deviation. The intercept is not stored; see
/// [`Dataset::design_row`].
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    label_name: String,
    features: Vec<f64>,
    labels: Vec<u8>,
    split: Vec<Split>,
}

impl Dataset {
    /// Build from raw rows, splitting and standardizing.
    pub fn from_rows(
        feature_names: Vec<String>,
        label_name: String,
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
        test_fraction: f64,
        seed: u64,
    ) -> Result<Self, DataError> {
        let n = rows.len();
        let d = feature_names.len();
        if labels.len() != n {
            return Err(DataError::Schema("label count differs from row count".into()));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(DataError::Schema("ragged feature rows".into()));
        }
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(DataError::Schema(format!(
                "test_fraction must lie in [0, 1), got {test_fraction}"
            )));
        }
        let n_test = (test_fraction * n as f64).round() as usize;
        if n_test >= n {
            return Err(DataError::Schema("split leaves no training rows".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut split = vec![Split::Train; n];
        for &i in &order[..n_test] {
            split[i] = Split::Test;
        }

        let mut features: Vec<f64> = rows.into_iter().flatten().collect();
        let n_train = (n - n_test) as f64;
        for j in 0..d {
            let train = (0..n).filter(|&i| split[i] == Split::Train);
            let mean = train.clone().map(|i| features[i * d + j]).sum::<f64>() / n_train;
            let var = train
                .map(|i| (features[i * d + j] - mean).powi(2))
                .sum::<f64>()
                / n_train;
            if var <= 0.0 {
                return Err(DataError::Schema(format!(
                    "feature column `{}` is constant on the training split",
                    feature_names[j]
                )));
            }
            let sd = var.sqrt();
            for i in 0..n {
                features[i * d + j] = (features[i * d + j] - mean) / sd;
            }
        }
        Ok(Dataset {
            feature_names,
            label_name,
            features,
            labels,
            split,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    /// Number of feature columns (without the intercept).
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.features[i * d..(i + 1) * d]
    }

    /// Standardized features of row `i` followed by a constant 1.
    pub fn design_row(&self, i: usize) -> Vec<f64> {
        let mut r = self.row(i).to_vec();
        r.push(1.0);
        r
    }

    /// Label of row `i` in {0, 1}.
    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn split(&self, i: usize) -> Split {
        self.split[i]
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.split[i] == which).collect()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.indices(Split::Train)
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.indices(Split::Test)
    }

    /// Persist as `<prefix>.data.csv` (standardized features in input
    /// column order, then the label) and `<prefix>.split.csv` (`row,split`
    /// with `train`/`test` tags, rows in input order).
    pub fn save_cache(&self, prefix: &Path) -> Result<(), DataError> {
        let mut w = csv::Writer::from_path(with_suffix(prefix, ".data.csv"))?;
        let mut header = self.feature_names.clone();
        header.push(self.label_name.clone());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(with_suffix(prefix, ".split.csv"))?;
        w.write_record(["row", "split"])?;
        for i in 0..self.n_rows() {
            let tag = match self.split[i] {
                Split::Train => "train",
                Split::Test => "test",
            };
            w.write_record([i.to_string().as_str(), tag])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`Dataset::save_cache`]. Values are taken as already
    /// standardized.
    pub fn load_cache(prefix: &Path) -> Result<Self, DataError> {
        let data_path = with_suffix(prefix, ".data.csv");
        let raw = read_csv_table(&data_path, None)?;
        let split_path = with_suffix(prefix, ".split.csv");
        let mut rdr = csv::Reader::from_path(&split_path)?;
        let mut split = Vec::with_capacity(raw.labels.len());
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(k as u64 + 2, |p| p.line());
            let parse_err = |msg: &str| DataError::Parse {
                path: split_path.display().to_string(),
                line,
                msg: msg.to_string(),
            };
            if rec.get(0).and_then(|v| v.parse::<usize>().ok()) != Some(k) {
                return Err(parse_err("row index out of order"));
            }
            split.push(match rec.get(1) {
                Some("train") => Split::Train,
                Some("test") => Split::Test,
                _ => return Err(parse_err("split tag must be `train` or `test`")),
            });
        }
        if split.len() != raw.labels.len() {
            return Err(DataError::Schema("split sidecar row count differs from data".into()));
        }
        Ok(Dataset {
            feature_names: raw.feature_names,
            label_name: raw.label_name,
            features: raw.rows.into_iter().flatten().collect(),
            labels: raw.labels,
            split,
        })
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

struct RawTable {
    feature_names: Vec<String>,
    label_name: String,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

/// Reads a headered CSV. The label column is `label_column`, or the last
/// column when `None`.
fn read_csv_table(path: &Path, label_column: Option<&str>) -> Result<RawTable, DataError> {
    let shown = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = match label_column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::Schema(format!("no column named `{name}` in {shown}")))?,
        None => headers
            .len()
            .checked_sub(1)
            .ok_or_else(|| DataError::Schema(format!("{shown} has no columns")))?,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.position() {
            Some(pos) => DataError::Parse {
                path: shown.clone(),
                line: pos.line(),
                msg: e.to_string(),
            },
            None => DataError::Csv(e),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(feature_names.len());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| DataError::Parse {
                path: shown.clone(),
                line,
                msg: format!("column `{}`: cannot parse `{field}` as a number", headers[j]),
            })?;
            if !v.is_finite() {
                return Err(DataError::Parse {
                    path: shown.clone(),
                    line,
                    msg: format!("column `{}`: non-finite value", headers[j]),
                });
            }
            if j == label_idx {
                let label = if v == 1.0 {
                    1
                } else if v == 0.0 || v == -1.0 {
                    0
                } else {
                    return Err(DataError::Schema(format!(
                        "{shown}: line {line}: label `{field}` is not binary"
                    )));
                };
                labels.push(label);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Schema(format!("{shown} has no data rows")));
    }
    Ok(RawTable {
        feature_names,
        label_name: headers[label_idx].clone(),
        rows,
        labels,
    })
}

/// Load a headered, comma-separated file with numeric features and a binary
/// label column (`0/1` or `-1/1`), split it with `seed` and standardize on
/// the training rows.
pub fn load_dataset(
    path: &Path,
    label_column: &str,
    test_fraction: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    let raw = read_csv_table(path, Some(label_column))?;
    Dataset::from_rows(
        raw.feature_names,
        raw.label_name,
        raw.rows,
        raw.labels,
        test_fraction,
        seed,
    )
}

/// Bayesian logistic regression with an isotropic Gaussian prior.
///
/// Parameters are the feature weights followed by the intercept. The
/// stochastic gradient draws `minibatch` distinct training rows uniformly at
/// random and scales their likelihood gradient by `N / minibatch`.
#[derive(Clone, Debug)]
pub struct Blr {
    design: Vec<f64>,
    signs: Vec<f64>,
    dim: usize,
    prior_variance: f64,
    minibatch: usize,
}

impl Blr {
    pub fn new(data: &Dataset, prior_variance: f64, minibatch: usize) -> Result<Self, SamplerError> {
        let train = data.train_indices();
        if minibatch == 0 || minibatch > train.len() {
            return Err(SamplerError::InvalidConfig(format!(
                "minibatch must lie in 1..={}, got {minibatch}",
                train.len()
            )));
        }
        if !(prior_variance.is_finite() && prior_variance > 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "prior variance must be positive, got {prior_variance}"
            )));
        }
        let design = train.iter().flat_map(|&i| data.design_row(i)).collect();
        let signs = train
            .iter()
            .map(|&i| if data.label(i) == 1 { 1.0 } else { -1.0 })
            .collect();
        Ok(Blr {
            design,
            signs,
            dim: data.dim() + 1,
            prior_variance,
            minibatch,
        })
    }

    pub fn n_train(&self) -> usize {
        self.signs.len()
    }

    pub fn minibatch(&self) -> usize {
        self.minibatch
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.dim..(i + 1) * self.dim]
    }

    fn score(&self, i: usize, theta: &[f64]) -> f64 {
        self.row(i).iter().zip(theta).map(|(x, t)| x * t).sum()
    }

    fn accumulate_likelihood_grad(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        let y = self.signs[i];
        // d/dtheta of log(1 + exp(-y z)) is -y sigmoid(-y z) x
        let w = -y * sigmoid(-y * self.score(i, theta));
        for (o, x) in out.iter_mut().zip(self.row(i)) {
            *o += w * x;
        }
    }

    fn finish(&self, theta: &[f64], mut g: Vec<f64>, scale: f64) -> Vec<f64> {
        for (gi, t) in g.iter_mut().zip(theta) {
            *gi = scale * *gi + t / self.prior_variance;
        }
        g
    }
}

/// Shorthand for [`Blr::new`].
pub fn blr_potential(data: &Dataset, prior_variance: f64, minibatch: usize) -> Result<Blr, SamplerError> {
    Blr::new(data, prior_variance, minibatch)
}

impl Potential for Blr {
    fn dim(&self) -> usize {
        self.dim
    }

    fn energy(&self, theta: &[f64]) -> f64 {
        let nll: f64 = (0..self.n_train())
            .map(|i| log1p_exp(-self.signs[i] * self.score(i, theta)))
            .sum();
        nll + theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * self.prior_variance)
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for i in 0..self.n_train() {
            self.accumulate_likelihood_grad(i, theta, &mut g);
        }
        self.finish(theta, g, 1.0)
    }

    fn stoch_grad(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let n = self.n_train();
        let mut idx = rand::seq::index::sample(rng, n, self.minibatch).into_vec();
        idx.sort_unstable();
        let mut g = vec![0.0; self.dim];
        for &i in &idx {
            self.accumulate_likelihood_grad(i, theta, &mut g);
        }
        self.finish(theta, g, n as f64 / self.minibatch as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn finite_diff_grad(model: &dyn Potential, theta: &[f64]) -> Vec<f64> {
        (0..theta.len())
            .map(|d| {
                let h = 1e-5 * theta[d].abs().max(1.0);
                let mut up = theta.to_vec();
                let mut dn = theta.to_vec();
                up[d] += h;
                dn[d] -= h;
                (model.energy(&up) - model.energy(&dn)) / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_matches_fd(model: &dyn Potential, theta: &[f64]) {
        let g = model.grad(theta);
        let fd = finite_diff_grad(model, theta);
        for (a, b) in g.iter().zip(&fd) {
            assert!(
                (a - b).abs() <= 1e-5 * a.abs().max(1.0),
                "grad {g:?} vs finite differences {fd:?} at {theta:?}"
            );
        }
    }

    /// Mean of `n` stochastic gradients must sit within 3 standard errors of
    /// the exact gradient, coordinate-wise.
    fn assert_unbiased(model: &dyn Potential, theta: &[f64], n: usize, seed: u64) {
        let mut r = rng(seed);
        let d = model.dim();
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for _ in 0..n {
            for (k, v) in model.stoch_grad(theta, &mut r).into_iter().enumerate() {
                sum[k] += v;
                sq[k] += v * v;
            }
        }
        let exact = model.grad(theta);
        for k in 0..d {
            let mean = sum[k] / n as f64;
            let var = (sq[k] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - exact[k]).abs() <= 3.0 * se + 1e-12,
                "coordinate {k}: mean {mean} exact {} se {se}",
                exact[k]
            );
        }
    }

    pub(crate) fn toy_dataset(n: usize, seed: u64) -> Dataset {
        let mut r = rng(seed);
        let names = vec!["x0".to_string(), "x1".to_string(), "x2".to_string()];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..3).map(|_| r.sample::<f64, _>(StandardNormal) * 2.0 + 1.0).collect();
            let z = 1.5 * x[0] - x[1] + 0.3;
            labels.push(u8::from(r.random::<f64>() < sigmoid(z)));
            rows.push(x);
        }
        Dataset::from_rows(names, "y".into(), rows, labels, 0.2, seed).unwrap()
    }

    #[test]
    fn gaussian_examples() {
        let g = gaussian_potential(vec![0.0], 1.0).unwrap();
        assert_eq!(g.energy(&[0.0]), 0.0);
        assert_eq!(g.grad(&[0.0]), vec![0.0]);
        assert_eq!(g.energy(&[2.0]), 2.0);
        assert_eq!(g.grad(&[2.0]), vec![2.0]);
        let g = gaussian_potential(vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(g.energy(&[1.0, 1.0]), 0.5);
        assert_eq!(g.grad(&[1.0, 1.0]), vec![0.5, 0.5]);
        assert!(gaussian_potential(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn multiwell_center_gradient_vanishes() {
        let m = multiwell_potential(MultiwellSpec::default()).unwrap();
        let g = m.grad(&[0.0])[0];
        assert!(g.abs() < 1e-12);
        let fd = finite_diff_grad(&m, &[0.0])[0];
        assert!((g - fd).abs() < 1e-6);
    }

    #[test]
    fn multiwell_restoring_near_each_mode() {
        let m = multiwell_potential(MultiwellSpec::default()).unwrap();
        for &mu in &m.spec().centers {
            assert!(m.grad(&[mu + 1e-3])[0] > 0.0);
            assert!(m.grad(&[mu - 1e-3])[0] < 0.0);
        }
    }

    #[test]
    fn multiwell_noise_variance() {
        let m = multiwell_potential(MultiwellSpec::default()).unwrap();
        let mut r = rng(5);
        let theta = [1.3];
        let exact = m.grad(&theta)[0];
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| m.stoch_grad(&theta, &mut r)[0] - exact).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((1.96..=2.04).contains(&var), "variance {var}");
    }

    #[test]
    fn multiwell_normalizes_on_window() {
        let m = multiwell_potential(MultiwellSpec::default()).unwrap();
        // exp(-U) integrates to K * sqrt(2 pi) * width
        let z = 5.0 * (2.0 * std::f64::consts::PI).sqrt() * 0.8;
        let n = 400_000;
        let h = 40.0 / n as f64;
        let inside: f64 = (0..=n)
            .map(|i| {
                let x = -20.0 + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * (-m.energy(&[x])).exp()
            })
            .sum::<f64>()
            * h;
        assert!(inside.is_finite());
        assert!((z - inside) / z < 1e-10, "outside mass {}", (z - inside) / z);
        assert!(m.cdf(-20.0) < 1e-10 && 1.0 - m.cdf(20.0) < 1e-10);
    }

    #[test]
    fn multiwell_spec_validation() {
        let mut s = MultiwellSpec::default();
        s.centers = vec![0.0, 0.0];
        assert!(Multiwell::new(s).is_err());
        let s = MultiwellSpec { width: -1.0, ..MultiwellSpec::default() };
        assert!(Multiwell::new(s).is_err());
        let s = MultiwellSpec { noise_b: -1.0, ..MultiwellSpec::default() };
        assert!(Multiwell::new(s).is_err());
    }

    #[test]
    fn noisy_gradient_zero_noise_is_exact() {
        let base = Gaussian::standard(3);
        let noisy = noisy_gradient(base.clone(), 0.0).unwrap();
        let mut r = rng(1);
        let theta = [0.3, -1.0, 2.0];
        assert_eq!(noisy.stoch_grad(&theta, &mut r), base.grad(&theta));
    }

    #[test]
    fn noisy_gradient_variance_and_bias() {
        let noisy = noisy_gradient(Gaussian::standard(1), 1.0).unwrap();
        let mut r = rng(2);
        let theta = [0.7];
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| noisy.stoch_grad(&theta, &mut r)[0]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 2.0).abs() < 0.04, "variance {var}");
        assert!((mean - 0.7).abs() < 3.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = gaussian_potential(vec![1.0, -2.0], 0.7).unwrap();
        let m = multiwell_potential(MultiwellSpec::default()).unwrap();
        let data = toy_dataset(200, 4);
        let blr = blr_potential(&data, 1.0, 16).unwrap();
        let mut r = rng(8);
        for _ in 0..5 {
            let t2: Vec<f64> = (0..2).map(|_| r.random_range(-3.0..3.0)).collect();
            assert_grad_matches_fd(&g, &t2);
            assert_grad_matches_fd(&m, &[r.random_range(-10.0..10.0)]);
            let t4: Vec<f64> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
            assert_grad_matches_fd(&blr, &t4);
        }
    }

    #[test]
    fn stochastic_gradients_are_unbiased() {
        let noisy = noisy_gradient(gaussian_potential(vec![0.5, 0.0], 2.0).unwrap(), 1.0).unwrap();
        let m = multiwell_potential(MultiwellSpec::default()).unwrap();
        let data = toy_dataset(300, 6);
        let blr = blr_potential(&data, 1.0, 16).unwrap();
        let mut r = rng(10);
        for k in 0..5 {
            assert_unbiased(&noisy, &[r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)], 20_000, k);
            assert_unbiased(&m, &[r.random_range(-9.0..9.0)], 20_000, 100 + k);
            let t: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            assert_unbiased(&blr, &t, 20_000, 200 + k);
        }
    }

    #[test]
    fn blr_minibatch_unbiased_many_draws() {
        let data = toy_dataset(400, 12);
        let blr = blr_potential(&data, 1.0, 16).unwrap();
        assert_unbiased(&blr, &[0.4, -0.3, 0.1, 0.2], 100_000, 77);
    }

    #[test]
    fn blr_at_zero() {
        let data = toy_dataset(50, 3);
        let blr = blr_potential(&data, 1.0, 8).unwrap();
        let zero = vec![0.0; blr.dim()];
        let per_row = blr.energy(&zero) / blr.n_train() as f64;
        assert_relative_eq!(per_row, 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn blr_full_batch_is_exact() {
        let data = toy_dataset(60, 9);
        let n = data.train_indices().len();
        let blr = blr_potential(&data, 2.0, n).unwrap();
        let theta = [0.3, -0.2, 0.5, 0.1];
        for s in 0..5 {
            assert_eq!(blr.stoch_grad(&theta, &mut rng(s)), blr.grad(&theta));
        }
        assert!(blr_potential(&data, 1.0, n + 1).is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ten_row_split() {
        let mut csv = String::from("a,b,label\n");
        for i in 0..10 {
            csv.push_str(&format!("{},{},{}\n", i, (i * i) % 7, i % 2));
        }
        let f = write_tmp(&csv);
        let d = load_dataset(f.path(), "label", 0.2, 1).unwrap();
        assert_eq!(d.train_indices().len(), 8);
        assert_eq!(d.test_indices().len(), 2);
        assert_eq!(d.dim(), 2);
        let again = load_dataset(f.path(), "label", 0.2, 1).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn training_columns_standardized() {
        let data = toy_dataset(500, 21);
        let train = data.train_indices();
        let n = train.len() as f64;
        for j in 0..data.dim() {
            let mean = train.iter().map(|&i| data.row(i)[j]).sum::<f64>() / n;
            let var = train.iter().map(|&i| (data.row(i)[j] - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn malformed_row_names_line() {
        let f = write_tmp("a,b,label\n1,2,0\n3,oops,1\n");
        match load_dataset(f.path(), "label", 0.0, 0) {
            Err(DataError::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("oops"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_tmp("a,b,label\n1,2,0\n3,4\n");
        assert!(matches!(load_dataset(f.path(), "label", 0.0, 0), Err(DataError::Parse { line: 3, .. })));
    }

    #[test]
    fn non_binary_label_is_schema_error() {
        let f = write_tmp("a,label\n1,0\n2,3\n");
        assert!(matches!(load_dataset(f.path(), "label", 0.0, 0), Err(DataError::Schema(_))));
        let f = write_tmp("a,label\n1,0\n2,1\n");
        assert!(matches!(load_dataset(f.path(), "missing", 0.0, 0), Err(DataError::Schema(_))));
    }

    #[test]
    fn cache_round_trip() {
        let data = toy_dataset(40, 2);
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("toy");
        data.save_cache(&prefix).unwrap();
        let back = Dataset::load_cache(&prefix).unwrap();
        assert_eq!(back.dim(), data.dim());
        assert_eq!(back.test_indices(), data.test_indices());
        for i in 0..data.n_rows() {
            assert_eq!(back.row(i), data.row(i));
            assert_eq!(back.label(i), data.label(i));
        }
    }

    fn bundled(name: &str) -> std::path::PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
    }

    #[test]
    fn bundled_pima_has_eight_features() {
        let d = load_dataset(&bundled("pima.csv"), "outcome", 0.2, 0).unwrap();
        assert_eq!(d.dim(), 8);
        assert_eq!(d.n_rows(), 768);
    }

    #[test]
    fn bundled_heart_features() {
        // 13 attributes; the file has 14 columns with the label.
        let d = load_dataset(&bundled("heart.csv"), "disease", 0.2, 0).unwrap();
        assert_eq!(d.dim(), 13);
        assert_eq!(d.feature_names().len() + 1, 14);
        assert_eq!(d.n_rows(), 270);
    }
}
