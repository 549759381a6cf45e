//! Diversity estimators over ensembles of behavior vectors.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::AnalyticsError;

pub const ENTROPY_REGULARIZER: f64 = 1e-6;
pub const DEFAULT_RESOLUTION: u32 = 4;

/// Per-feature min-max scaling fitted on an ensemble.
///
/// Features with zero range carry no information and are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub kept: Vec<usize>,
}

impl Normalizer {
    pub fn fit<V: AsRef<[f64]>>(vs: &[V]) -> Result<Self, AnalyticsError> {
        let d = vs.first().map(|v| v.as_ref().len()).unwrap_or(0);
        if vs.iter().any(|v| v.as_ref().len() != d) {
            return Err(AnalyticsError::Ragged);
        }
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for v in vs {
            for (k, x) in v.as_ref().iter().enumerate() {
                min[k] = min[k].min(*x);
                max[k] = max[k].max(*x);
            }
        }
        let kept: Vec<usize> = (0..d).filter(|&k| max[k] > min[k]).collect();
        if kept.len() < d {
            tracing::debug!(dropped = d - kept.len(), "degenerate features dropped");
        }
        Ok(Normalizer { min, max, kept })
    }

    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.kept.iter().map(|&k| (v[k] - self.min[k]) / (self.max[k] - self.min[k])).collect()
    }

    pub fn apply_all<V: AsRef<[f64]>>(&self, vs: &[V]) -> Vec<Vec<f64>> {
        vs.iter().map(|v| self.apply(v.as_ref())).collect()
    }
}

fn check_len<V: AsRef<[f64]>>(vs: &[V], needed: usize) -> Result<(), AnalyticsError> {
    if vs.len() < needed {
        return Err(AnalyticsError::TooFewSamples { needed, got: vs.len() });
    }
    Ok(())
}

/// Number of distinct occupied cells of a `resolution`-per-axis grid over
/// already-normalized vectors.
pub fn occupied_cells<V: AsRef<[f64]>>(normalized: &[V], resolution: u32) -> usize {
    let res = resolution.max(1);
    let mut cells: HashSet<Vec<u32>> = HashSet::new();
    for v in normalized {
        let cell = v.as_ref().iter().map(|x| ((x * res as f64).floor().max(0.0) as u32).min(res - 1)).collect();
        cells.insert(cell);
    }
    cells.len()
}

/// Behavior-space coverage: occupied cells after ensemble normalization.
pub fn diversity_coverage<V: AsRef<[f64]>>(vs: &[V], resolution: u32) -> Result<f64, AnalyticsError> {
    check_len(vs, 2)?;
    let norm = Normalizer::fit(vs)?;
    Ok(occupied_cells(&norm.apply_all(vs), resolution) as f64)
}

/// Mean Euclidean distance over unordered pairs.
pub fn mean_pairwise_distance<V: AsRef<[f64]>>(vs: &[V]) -> f64 {
    let n = vs.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = vs[i].as_ref().iter().zip(vs[j].as_ref()).map(|(a, b)| (a - b) * (a - b)).sum();
            sum += d2.sqrt();
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

pub fn diversity_mean_pairwise<V: AsRef<[f64]>>(vs: &[V]) -> Result<f64, AnalyticsError> {
    check_len(vs, 2)?;
    let norm = Normalizer::fit(vs)?;
    Ok(mean_pairwise_distance(&norm.apply_all(vs)))
}

/// Sample covariance with the n-1 denominator.
pub fn covariance<V: AsRef<[f64]>>(vs: &[V]) -> Vec<Vec<f64>> {
    let n = vs.len();
    let d = vs.first().map(|v| v.as_ref().len()).unwrap_or(0);
    let mut mean = vec![0.0; d];
    for v in vs {
        for (m, x) in mean.iter_mut().zip(v.as_ref()) {
            *m += x / n as f64;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for v in vs {
        let c: Vec<f64> = v.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect();
        for a in 0..d {
            for b in a..d {
                cov[a][b] += c[a] * c[b];
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for a in 0..d {
        for b in a..d {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }
    }
    cov
}

/// log det of a symmetric positive-definite matrix by Cholesky.
fn log_det_spd(mut m: Vec<Vec<f64>>) -> f64 {
    let d = m.len();
    let mut log_det = 0.0;
    for j in 0..d {
        let mut s = m[j][j];
        for k in 0..j {
            s -= m[j][k] * m[j][k];
        }
        let l = s.max(f64::MIN_POSITIVE).sqrt();
        m[j][j] = l;
        log_det += 2.0 * l.ln();
        for i in j + 1..d {
            let mut s = m[i][j];
            for k in 0..j {
                s -= m[i][k] * m[j][k];
            }
            m[i][j] = s / l;
        }
    }
    log_det
}

/// Gaussian differential entropy ½ ln((2πe)^d det(Σ + λI)) of raw vectors.
pub fn gaussian_entropy<V: AsRef<[f64]>>(vs: &[V]) -> Result<f64, AnalyticsError> {
    let d = vs.first().map(|v| v.as_ref().len()).unwrap_or(0);
    check_len(vs, d + 2)?;
    let mut cov = covariance(vs);
    for (k, row) in cov.iter_mut().enumerate() {
        row[k] += ENTROPY_REGULARIZER;
    }
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok(0.5 * (d as f64 * two_pi_e.ln() + log_det_spd(cov)))
}

pub fn diversity_entropy<V: AsRef<[f64]>>(vs: &[V]) -> Result<f64, AnalyticsError> {
    check_len(vs, 2)?;
    let norm = Normalizer::fit(vs)?;
    gaussian_entropy(&norm.apply_all(vs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub coverage: f64,
    pub mean_pairwise: f64,
    pub entropy: f64,
    pub n_samples: usize,
    pub bootstrap_replicates: usize,
}

/// All three estimators on vectors that are already normalized. Entropy is
/// NaN when there are too few samples for the covariance.
pub fn score_normalized<V: AsRef<[f64]>>(normalized: &[V], resolution: u32) -> Result<DiversityReport, AnalyticsError> {
    check_len(normalized, 2)?;
    let entropy = match gaussian_entropy(normalized) {
        Err(AnalyticsError::TooFewSamples { .. }) => f64::NAN,
        other => other?,
    };
    Ok(DiversityReport {
        coverage: occupied_cells(normalized, resolution) as f64,
        mean_pairwise: mean_pairwise_distance(normalized),
        entropy,
        n_samples: normalized.len(),
        bootstrap_replicates: 1,
    })
}

/// Normalize over the ensemble, then score.
pub fn diversity_report<V: AsRef<[f64]>>(vs: &[V], resolution: u32) -> Result<DiversityReport, AnalyticsError> {
    check_len(vs, 2)?;
    let norm = Normalizer::fit(vs)?;
    score_normalized(&norm.apply_all(vs), resolution)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub subsample: usize,
    pub resolution: u32,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { replicates: 100, subsample: 250, resolution: DEFAULT_RESOLUTION }
    }
}

/// Per-replicate reports plus per-measure distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDistribution {
    pub reports: Vec<DiversityReport>,
}

impl BootstrapDistribution {
    pub fn coverage(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.coverage).collect()
    }

    pub fn mean_pairwise(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.mean_pairwise).collect()
    }

    pub fn entropy(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.entropy).collect()
    }

    /// Medians of (coverage, mean pairwise, entropy).
    pub fn medians(&self) -> [f64; 3] {
        [median(self.coverage()), median(self.mean_pairwise()), median(self.entropy())]
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Subsample without replacement `replicates` times, normalizing each subsample on its own.
pub fn bootstrap_diversity<V: AsRef<[f64]>, R: Rng + ?Sized>(
    runs: &[V],
    config: &BootstrapConfig,
    rng: &mut R,
) -> Result<BootstrapDistribution, AnalyticsError> {
    bootstrap_inner(runs, None, config, rng)
}

/// As [`bootstrap_diversity`] but with a fixed normalizer, so replicates
/// from different ensembles share one scale.
pub fn bootstrap_diversity_pooled<V: AsRef<[f64]>, R: Rng + ?Sized>(
    runs: &[V],
    normalizer: &Normalizer,
    config: &BootstrapConfig,
    rng: &mut R,
) -> Result<BootstrapDistribution, AnalyticsError> {
    bootstrap_inner(runs, Some(normalizer), config, rng)
}

fn bootstrap_inner<V: AsRef<[f64]>, R: Rng + ?Sized>(
    runs: &[V],
    normalizer: Option<&Normalizer>,
    config: &BootstrapConfig,
    rng: &mut R,
) -> Result<BootstrapDistribution, AnalyticsError> {
    if config.subsample > runs.len() {
        return Err(AnalyticsError::Subsample { subsample: config.subsample, available: runs.len() });
    }
    let mut reports = Vec::with_capacity(config.replicates);
    for _ in 0..config.replicates {
        let mut idx = sample(rng, runs.len(), config.subsample).into_vec();
        idx.sort_unstable();
        let picked: Vec<&[f64]> = idx.iter().map(|&i| runs[i].as_ref()).collect();
        let mut report = match normalizer {
            Some(n) => score_normalized(&n.apply_all(&picked), config.resolution)?,
            None => diversity_report(&picked, config.resolution)?,
        };
        report.bootstrap_replicates = config.replicates;
        reports.push(report);
    }
    Ok(BootstrapDistribution { reports })
}

/// Comma-separated table with a header row.
pub fn vectors_to_csv<V: AsRef<[f64]>>(names: &[&str], vs: &[V]) -> String {
    let mut out = String::new();
    out.push_str("run,");
    out.push_str(&names.join(","));
    out.push('\n');
    for (i, v) in vs.iter().enumerate() {
        let _ = write!(out, "{i}");
        for x in v.as_ref() {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

pub fn reports_to_csv(label: &str, reports: &[DiversityReport]) -> String {
    let mut out = String::from("label,replicate,coverage,mean_pairwise,entropy,n_samples\n");
    for (i, r) in reports.iter().enumerate() {
        let _ = writeln!(out, "{label},{i},{},{},{},{}", r.coverage, r.mean_pairwise, r.entropy, r.n_samples);
    }
    out
}

pub fn reports_to_toml(reports: &[DiversityReport]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        report: &'a [DiversityReport],
    }
    toml::to_string(&Doc { report: reports }).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use rand_pcg::Pcg64Mcg;

    #[test]
    fn identical_vectors_are_minimal() {
        let vs = vec![vec![1.0, 2.0, 3.0]; 10];
        assert_eq!(diversity_coverage(&vs, 4).unwrap(), 1.0);
        assert_eq!(diversity_mean_pairwise(&vs).unwrap(), 0.0);
        let spread = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!(diversity_coverage(&spread, 4).unwrap() > 1.0);
    }

    #[test]
    fn pairwise_of_two() {
        let vs = [[0.0, 0.0], [3.0, 4.0]];
        assert!((mean_pairwise_distance(&vs) - 5.0).abs() < 1e-12);
        // both dims normalize to {0,1}
        assert!((diversity_mean_pairwise(&vs).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unit_gaussian_entropy() {
        let mut rng = Pcg64Mcg::seed_from_u64(3);
        let xs: Vec<[f64; 1]> = (0..10_000).map(|_| [StandardNormal.sample(&mut rng)]).collect();
        let h = gaussian_entropy(&xs).unwrap();
        let expect = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h - expect).abs() < 0.1, "{h} vs {expect}");
    }

    #[test]
    fn entropy_needs_samples_and_stays_finite() {
        assert!(gaussian_entropy(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
        let flat: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert!(gaussian_entropy(&flat).unwrap().is_finite());
    }

    #[test]
    fn wider_spread_more_entropy() {
        let mut rng = Pcg64Mcg::seed_from_u64(9);
        let base: Vec<[f64; 2]> =
            (0..200).map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]).collect();
        let wide: Vec<[f64; 2]> = base.iter().map(|v| [v[0] * 3.0, v[1]]).collect();
        assert!(gaussian_entropy(&wide).unwrap() > gaussian_entropy(&base).unwrap());
    }

    #[test]
    fn full_subsample_equals_direct() {
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        let vs: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let cfg = BootstrapConfig { replicates: 1, subsample: 20, resolution: 4 };
        let dist = bootstrap_diversity(&vs, &cfg, &mut rng).unwrap();
        let direct = diversity_report(&vs, 4).unwrap();
        assert_eq!(dist.reports[0], direct);
    }

    #[test]
    fn bootstrap_is_seeded() {
        let mut rng = Pcg64Mcg::seed_from_u64(5);
        let vs: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let cfg = BootstrapConfig { replicates: 10, subsample: 25, resolution: 4 };
        let a = bootstrap_diversity(&vs, &cfg, &mut Pcg64Mcg::seed_from_u64(7)).unwrap();
        let b = bootstrap_diversity(&vs, &cfg, &mut Pcg64Mcg::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        let too_many = BootstrapConfig { subsample: 51, ..cfg };
        assert!(bootstrap_diversity(&vs, &too_many, &mut rng).is_err());
    }

    #[test]
    fn exports() {
        let r = diversity_report(&[[0.0], [1.0], [0.5]], 4).unwrap();
        let csv = reports_to_csv("x", &[r]);
        assert!(csv.starts_with("label,replicate"));
        assert!(reports_to_toml(&[r]).contains("[[report]]"));
        assert_eq!(vectors_to_csv(&["a"], &[[1.5]]), "run,a\n0,1.5\n");
    }
}
