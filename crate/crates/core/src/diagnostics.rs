//! Trace diagnostics: autocorrelation, ESS, distribution fit, mode coverage
//! and predictive scoring.

use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::ChainTrace;
use crate::error::DiagnosticsError;
use crate::kinetics::sigmoid;
use crate::potentials::Dataset;

/// Minimum series length accepted by [`effective_sample_size`].
pub const MIN_ESS_LENGTH: usize = 100;

/// Default lag horizon of the autocorrelation curves in a report.
pub const DEFAULT_MAX_LAG: usize = 100;

fn centered(series: &[f64]) -> Result<(Vec<f64>, f64), DiagnosticsError> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let x: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var = x.iter().map(|v| v * v).sum::<f64>() / n;
    if !(var > 0.0) || !var.is_finite() {
        return Err(DiagnosticsError::DegenerateVariance);
    }
    Ok((x, var))
}

/// Biased autocorrelation at every lag `0..n`, via zero-padded FFT.
fn full_autocorrelation(series: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
    let n = series.len();
    let (x, var) = centered(series)?;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    // the unnormalized inverse carries a factor of len
    let norm = len as f64 * n as f64 * var;
    let mut rho: Vec<f64> = buf[..n].iter().map(|z| (z.re / norm).clamp(-1.0, 1.0)).collect();
    rho[0] = 1.0;
    Ok(rho)
}

/// Autocorrelation `rho_0..=rho_max_lag` with the length-normalized
/// autocovariance estimator.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if max_lag == 0 {
        return Err(DiagnosticsError::InvalidArgument("max_lag must be at least 1".into()));
    }
    if series.len() <= max_lag {
        return Err(DiagnosticsError::TooShort {
            needed: max_lag + 1,
            got: series.len(),
        });
    }
    let mut rho = full_autocorrelation(series)?;
    rho.truncate(max_lag + 1);
    Ok(rho)
}

/// Integrated autocorrelation time with Geyer's initial positive sequence:
/// pair sums `rho_2k + rho_2k+1` are accumulated until the first
/// non-positive one. Clamped below at 1 so that the ESS never exceeds `T`.
pub fn integrated_autocorrelation_time(series: &[f64]) -> Result<f64, DiagnosticsError> {
    if series.len() < MIN_ESS_LENGTH {
        return Err(DiagnosticsError::TooShort {
            needed: MIN_ESS_LENGTH,
            got: series.len(),
        });
    }
    let rho = full_autocorrelation(series)?;
    let mut sum = 0.0;
    for pair in rho.chunks_exact(2) {
        let gamma = pair[0] + pair[1];
        if gamma <= 0.0 {
            break;
        }
        sum += gamma;
    }
    Ok((2.0 * sum - 1.0).max(1.0))
}

/// `T / tau` with `tau` from [`integrated_autocorrelation_time`].
pub fn effective_sample_size(series: &[f64]) -> Result<f64, DiagnosticsError> {
    Ok(series.len() as f64 / integrated_autocorrelation_time(series)?)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`.
/// Returns 0 for an empty sample.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(samples);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Sup-norm distance between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Number of `centers` with at least one sample within `radius`.
pub fn mode_coverage(samples: &[f64], centers: &[f64], radius: f64) -> Result<usize, DiagnosticsError> {
    let mut c = sorted(centers);
    c.dedup();
    let min_gap = c.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !(radius > 0.0 && radius < 0.5 * min_gap) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "radius {radius} must be positive and below half the center spacing {min_gap}"
        )));
    }
    let mut hit = vec![false; c.len()];
    for &x in samples {
        // nearest center is the only candidate since radius < spacing / 2
        let k = c.partition_point(|&m| m < x);
        for j in [k.wrapping_sub(1), k] {
            if j < c.len() && (x - c[j]).abs() <= radius {
                hit[j] = true;
            }
        }
    }
    Ok(hit.into_iter().filter(|&h| h).count())
}

/// Mann–Whitney AUROC; tied scores count one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, DiagnosticsError> {
    if scores.len() != labels.len() {
        return Err(DiagnosticsError::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(DiagnosticsError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // average 1-based rank over the tie block
        let rank = (start + end + 1) as f64 / 2.0;
        rank_sum += rank * order[start..end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Posterior predictive probabilities `mean_s sigmoid(theta_s . x)` for the
/// rows of `rows` (each already carrying the intercept column).
pub fn predictive_probabilities(samples: &[Vec<f64>], rows: &[Vec<f64>]) -> Result<Vec<f64>, DiagnosticsError> {
    let s = samples.len();
    if s == 0 {
        return Err(DiagnosticsError::TooShort { needed: 1, got: 0 });
    }
    let dim = samples[0].len();
    for v in samples.iter().chain(rows) {
        if v.len() != dim {
            return Err(DiagnosticsError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(rows
        .iter()
        .map(|x| {
            samples
                .iter()
                .map(|t| sigmoid(t.iter().zip(x).map(|(a, b)| a * b).sum()))
                .sum::<f64>()
                / s as f64
        })
        .collect())
}

/// Predictive probabilities on the test split of `data`.
pub fn blr_predict(trace: &ChainTrace, data: &Dataset) -> Result<Vec<f64>, DiagnosticsError> {
    if !trace.samples.is_empty() && trace.dim() != data.dim() + 1 {
        return Err(DiagnosticsError::DimensionMismatch {
            expected: data.dim() + 1,
            got: trace.dim(),
        });
    }
    let rows: Vec<Vec<f64>> = data.test_indices().into_iter().map(|i| data.design_row(i)).collect();
    predictive_probabilities(&trace.samples, &rows)
}

/// Test-split AUROC of the posterior predictive.
pub fn blr_auroc(trace: &ChainTrace, data: &Dataset) -> Result<f64, DiagnosticsError> {
    let scores = blr_predict(trace, data)?;
    let labels: Vec<bool> = data.test_indices().into_iter().map(|i| data.label(i) == 1).collect();
    auroc(&scores, &labels)
}

pub fn median(values: &[f64]) -> f64 {
    let s = sorted(values);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins spanning the sample range.
    pub fn new(samples: &[f64], bins: usize) -> Result<Self, DiagnosticsError> {
        if bins == 0 {
            return Err(DiagnosticsError::InvalidArgument("bins must be positive".into()));
        }
        if samples.is_empty() {
            return Err(DiagnosticsError::TooShort { needed: 1, got: 0 });
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            hi = lo + 1.0;
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Histogram { edges, counts })
    }

    /// CSV with columns `left,right,count,density`.
    pub fn write_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        let total: u64 = self.counts.iter().sum();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["left", "right", "count", "density"])?;
        for (k, &count) in self.counts.iter().enumerate() {
            let width = self.edges[k + 1] - self.edges[k];
            let density = count as f64 / (total as f64 * width);
            w.write_record([
                self.edges[k].to_string(),
                self.edges[k + 1].to_string(),
                count.to_string(),
                density.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n_samples: usize,
    pub ess_per_dim: Vec<f64>,
    pub ess_median: f64,
    pub acf: Vec<Vec<f64>>,
    pub ks: Option<f64>,
    pub modes_visited: Option<usize>,
    pub auroc: Option<f64>,
}

impl DiagnosticsReport {
    /// ESS and autocorrelation of every coordinate of `samples`.
    pub fn from_samples(samples: &[Vec<f64>], max_lag: usize) -> Result<Self, DiagnosticsError> {
        let n = samples.len();
        let dim = samples.first().map_or(0, Vec::len);
        let max_lag = max_lag.min(n.saturating_sub(1));
        let mut ess_per_dim = Vec::with_capacity(dim);
        let mut acf = Vec::with_capacity(dim);
        for d in 0..dim {
            let series: Vec<f64> = samples.iter().map(|s| s[d]).collect();
            ess_per_dim.push(effective_sample_size(&series)?);
            acf.push(autocorrelation(&series, max_lag)?);
        }
        Ok(DiagnosticsReport {
            n_samples: n,
            ess_median: median(&ess_per_dim),
            ess_per_dim,
            acf,
            ks: None,
            modes_visited: None,
            auroc: None,
        })
    }

    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "n_samples = {}\ness_median = {:.3}\ness_per_dim = {}\n",
            self.n_samples,
            self.ess_median,
            join(&self.ess_per_dim)
        );
        for (d, curve) in self.acf.iter().enumerate() {
            let lag1 = curve.get(1).copied().unwrap_or(f64::NAN);
            out.push_str(&format!("acf_lag1_theta_{d} = {lag1:.6}\n"));
        }
        if let Some(ks) = self.ks {
            out.push_str(&format!("ks = {ks:.6}\n"));
        }
        if let Some(m) = self.modes_visited {
            out.push_str(&format!("modes_visited = {m}\n"));
        }
        if let Some(a) = self.auroc {
            out.push_str(&format!("auroc = {a:.6}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::normal_cdf;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let e = normals(n, seed);
        let mut x = Vec::with_capacity(n);
        let mut prev = e[0] / (1.0 - rho * rho).sqrt();
        for v in e {
            prev = rho * prev + v;
            x.push(prev);
        }
        x
    }

    fn direct_acf(series: &[f64], max_lag: usize) -> Vec<f64> {
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let c = |k: usize| {
            series[..series.len() - k]
                .iter()
                .zip(&series[k..])
                .map(|(a, b)| (a - mean) * (b - mean))
                .sum::<f64>()
                / n
        };
        let c0 = c(0);
        (0..=max_lag).map(|k| c(k) / c0).collect()
    }

    #[test]
    fn fft_acf_matches_direct_sum() {
        for (n, seed) in [(101, 1), (1000, 2), (1537, 3)] {
            let x = ar1(n, 0.7, seed);
            let fast = autocorrelation(&x, 60).unwrap();
            let slow = direct_acf(&x, 60);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn acf_white_noise_and_ar1() {
        let rho = autocorrelation(&normals(10_000, 4), 5).unwrap();
        assert_eq!(rho[0], 1.0);
        assert!(rho[1].abs() < 0.05);
        let rho = autocorrelation(&ar1(100_000, 0.5, 5), 2).unwrap();
        assert!((0.48..=0.52).contains(&rho[1]), "{}", rho[1]);
    }

    #[test]
    fn acf_errors() {
        assert_eq!(autocorrelation(&[1.0; 50], 5), Err(DiagnosticsError::DegenerateVariance));
        assert!(matches!(autocorrelation(&[1.0, 2.0], 2), Err(DiagnosticsError::TooShort { .. })));
        assert!(matches!(autocorrelation(&[1.0, 2.0], 0), Err(DiagnosticsError::InvalidArgument(_))));
    }

    #[test]
    fn ess_white_noise() {
        let ess = effective_sample_size(&normals(4000, 6)).unwrap();
        assert!((3600.0..=4000.0).contains(&ess), "{ess}");
    }

    #[test]
    fn ess_ar1() {
        let t = 30_000;
        let ess = effective_sample_size(&ar1(t, 0.5, 7)).unwrap();
        let expected = t as f64 / 3.0;
        assert!((ess - expected).abs() < 0.1 * expected, "{ess}");
    }

    #[test]
    fn ess_errors() {
        assert!(matches!(effective_sample_size(&normals(99, 1)), Err(DiagnosticsError::TooShort { .. })));
        assert_eq!(effective_sample_size(&[3.0; 200]), Err(DiagnosticsError::DegenerateVariance));
    }

    #[test]
    fn ess_never_exceeds_length_for_anticorrelated_series() {
        let x: Vec<f64> = ar1(5000, -0.8, 8);
        assert!(effective_sample_size(&x).unwrap() <= 5000.0);
    }

    #[test]
    fn ks_examples() {
        let d = ks_statistic(&normals(100_000, 9), normal_cdf);
        assert!(d < 0.006, "{d}");
        assert_eq!(ks_statistic(&[0.0; 20], normal_cdf), 0.5);
        // sup |Phi(x) - Phi(x - 1)| = 2 Phi(1/2) - 1
        let shifted = ks_statistic(&normals(100_000, 10), |x| normal_cdf(x - 1.0));
        let exact = 2.0 * normal_cdf(0.5) - 1.0;
        assert!((shifted - exact).abs() < 0.006, "{shifted} vs {exact}");
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!(ks_two_sample(&normals(50_000, 1), &normals(50_000, 2)) < 0.015);
        let a: Vec<f64> = normals(50_000, 3);
        let b: Vec<f64> = normals(50_000, 4).into_iter().map(|x| x + 1.0).collect();
        assert!((ks_two_sample(&a, &b) - (2.0 * normal_cdf(0.5) - 1.0)).abs() < 0.015);
    }

    #[test]
    fn mode_coverage_examples() {
        let centers = [-8.0, -4.0, 0.0, 4.0, 8.0];
        assert_eq!(mode_coverage(&centers, &centers, 1.0).unwrap(), 5);
        assert_eq!(mode_coverage(&[4.0; 10], &centers, 1.0).unwrap(), 1);
        assert_eq!(mode_coverage(&[2.0, 6.0], &centers, 1.0).unwrap(), 0);
        assert_eq!(mode_coverage(&[-7.1, 0.99], &centers, 1.0).unwrap(), 2);
        assert!(mode_coverage(&[0.0], &centers, 2.0).is_err());
    }

    #[test]
    fn auroc_examples() {
        let a = auroc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(a, 0.75);
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5, 0.5], &[false, true]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.1, 0.2], &[true, true]), Err(DiagnosticsError::DegenerateLabels));
        let scores = normals(10_000, 11);
        let mut r = ChaCha8Rng::seed_from_u64(12);
        let labels: Vec<bool> = (0..10_000).map(|_| r.random()).collect();
        assert!((auroc(&scores, &labels).unwrap() - 0.5).abs() < 0.02);
    }

    fn brute_auroc(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    den += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    #[test]
    fn predictive_examples() {
        let rows = vec![vec![1.0, 2.0]];
        let one = predictive_probabilities(&[vec![0.5, -0.1]], &rows).unwrap();
        assert_eq!(one, vec![sigmoid(0.3)]);
        let two = predictive_probabilities(&[vec![0.5, -0.1], vec![1.0, 1.0]], &rows).unwrap();
        assert!((two[0] - 0.5 * (sigmoid(0.3) + sigmoid(3.0))).abs() < 1e-15);
        let sym = predictive_probabilities(&[vec![0.7, -1.3], vec![-0.7, 1.3]], &[vec![2.0, 5.0], vec![-1.0, 0.3]]).unwrap();
        for v in sym {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert!(matches!(
            predictive_probabilities(&[vec![1.0]], &rows),
            Err(DiagnosticsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn histogram_counts_everything() {
        let x = normals(1000, 13);
        let h = Histogram::new(&x, 20).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        assert_eq!(h.edges.len(), 21);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("left,right,count,density\n"));
        assert_eq!(text.lines().count(), 21);
    }

    #[test]
    fn report_fields() {
        let x = normals(2000, 14);
        let y = ar1(2000, 0.9, 15);
        let samples: Vec<Vec<f64>> = x.iter().zip(&y).map(|(a, b)| vec![*a, *b]).collect();
        let r = DiagnosticsReport::from_samples(&samples, 50).unwrap();
        assert_eq!(r.ess_per_dim.len(), 2);
        assert!(r.ess_per_dim.iter().all(|&e| e > 0.0 && e <= 2000.0));
        assert!(r.acf.iter().flatten().all(|v| v.abs() <= 1.0));
        assert_eq!(r.acf[0].len(), 51);
        assert!(r.to_key_value().contains("ess_median = "));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn auroc_matches_brute_force_and_is_rank_invariant(
            raw in proptest::collection::vec((0u8..12, proptest::bool::ANY), 2..60),
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 4.0).collect();
            let labels: Vec<bool> = raw.iter().map(|(_, l)| *l).collect();
            if let Ok(a) = auroc(&scores, &labels) {
                prop_assert!((a - brute_auroc(&scores, &labels)).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&a));
                let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
                prop_assert!((auroc(&warped, &labels).unwrap() - a).abs() < 1e-12);
            }
        }

        #[test]
        fn ess_is_affine_invariant(seed in 0u64..500, alpha in 0.01f64..100.0, beta in -100f64..100.0, neg in proptest::bool::ANY) {
            let x = ar1(500, 0.6, seed);
            let alpha = if neg { -alpha } else { alpha };
            let y: Vec<f64> = x.iter().map(|v| alpha * v + beta).collect();
            let (ex, ey) = (effective_sample_size(&x).unwrap(), effective_sample_size(&y).unwrap());
            prop_assert!((ex - ey).abs() <= 1e-6 * ex);
            prop_assert!(ex > 0.0 && ex <= 500.0);
        }

        #[test]
        fn ks_is_a_probability_gap(xs in proptest::collection::vec(-10f64..10.0, 1..200), shift in -3f64..3.0) {
            let d = ks_statistic(&xs, |x| normal_cdf(x - shift));
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn coverage_is_bounded(xs in proptest::collection::vec(-12f64..12.0, 0..100)) {
            let centers = [-8.0, -4.0, 0.0, 4.0, 8.0];
            prop_assert!(mode_coverage(&xs, &centers, 1.0).unwrap() <= 5);
        }

        #[test]
        fn predictive_in_unit_interval(t in proptest::collection::vec(-5f64..5.0, 3), x in proptest::collection::vec(-3f64..3.0, 3)) {
            let p = predictive_probabilities(&[t], &[x]).unwrap()[0];
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }
}
