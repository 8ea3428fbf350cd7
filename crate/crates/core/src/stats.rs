//! Running moments, estimate reports and Kolmogorov–Smirnov statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Welford accumulator. `merge` is the parallel (Chan et al.) update, so the
/// type forms a monoid under `merge` with `RunningStats::default()` as unit.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two observations).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Means and co-moments of a vector observation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultiStats {
    n: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl MultiStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn ensure_dim(&mut self, k: usize) {
        if self.mean.is_empty() && self.n == 0 {
            self.mean = vec![0.0; k];
            self.comoment = vec![0.0; k * k];
        }
        assert_eq!(self.mean.len(), k, "observation dimension changed");
    }

    pub fn push(&mut self, x: &[f64]) {
        let k = x.len();
        self.ensure_dim(k);
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        let before: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&before) {
            *m += d * inv;
        }
        for (i, (xi, mi)) in x.iter().zip(&self.mean).enumerate() {
            let after_i = xi - mi;
            for (c, b) in self.comoment[i * k..(i + 1) * k].iter_mut().zip(&before) {
                *c += after_i * b;
            }
        }
    }

    pub fn merge(&mut self, other: &MultiStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let k = self.dim();
        assert_eq!(k, other.dim(), "observation dimension changed");
        let n = self.n + other.n;
        let f = self.n as f64 * other.n as f64 / n as f64;
        let d: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for i in 0..k {
            for j in 0..k {
                self.comoment[i * k + j] += other.comoment[i * k + j] + d[i] * d[j] * f;
            }
        }
        let w = other.n as f64 / n as f64;
        for (m, di) in self.mean.iter_mut().zip(&d) {
            *m += di * w;
        }
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[i * self.dim() + j] / (self.n - 1) as f64
    }

    pub fn std_error(&self, i: usize) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.covariance(i, i).max(0.0) / self.n as f64).sqrt()
    }

    /// Covariance matrix of the sample means.
    pub fn mean_covariance(&self) -> Vec<Vec<f64>> {
        let k = self.dim();
        let n = self.n.max(1) as f64;
        (0..k)
            .map(|i| (0..k).map(|j| self.covariance(i, j) / n).collect())
            .collect()
    }

    /// Standard error of the mean of `w . x`.
    pub fn linear_std_error(&self, w: &[f64]) -> f64 {
        let k = self.dim();
        let mut v = 0.0;
        for i in 0..k {
            for j in 0..k {
                v += w[i] * w[j] * self.covariance(i, j);
            }
        }
        (v.max(0.0) / self.n.max(1) as f64).sqrt()
    }

    pub fn component(&self, i: usize) -> RunningStats {
        let k = self.dim();
        RunningStats {
            n: self.n,
            mean: self.mean[i],
            m2: self.comoment[i * k + i],
        }
    }
}

/// The result of one Monte Carlo estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: String,
    pub point: f64,
    pub std_error: f64,
    /// `[low, high]`, the normal 95% interval unless a method documents otherwise.
    pub ci95: [f64; 2],
    pub n_replicates: u64,
    pub master_seed: u64,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub partial: bool,
}

impl EstimateReport {
    pub fn new(method: &str, point: f64, std_error: f64, n_replicates: u64, master_seed: u64) -> Self {
        let half = Z95 * std_error;
        Self {
            method: method.to_string(),
            point,
            std_error,
            ci95: [point - half, point + half],
            n_replicates,
            master_seed,
            config_digest: String::new(),
            params: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            partial: false,
        }
    }

    pub fn from_stats(method: &str, stats: &RunningStats, master_seed: u64) -> Self {
        Self::new(method, stats.mean(), stats.std_error(), stats.count(), master_seed)
    }

    pub fn ci95_low(&self) -> f64 {
        self.ci95[0]
    }

    pub fn ci95_high(&self) -> f64 {
        self.ci95[1]
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn with_digest(mut self, digest: String) -> Self {
        self.config_digest = digest;
        self
    }

    pub fn with_partial(mut self, partial: bool) -> Self {
        self.partial = partial;
        self
    }

    /// Removes floating-point excursions outside `[0, 1]` from the point of a
    /// probability-valued estimate; the interval is left untouched.
    pub fn as_probability(mut self) -> Self {
        self.point = self.point.clamp(0.0, 1.0);
        self
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci95[0] <= x && x <= self.ci95[1]
    }

    pub fn overlaps(&self, other: &EstimateReport) -> bool {
        self.ci95[0] <= other.ci95[1] && other.ci95[0] <= self.ci95[1]
    }

    /// Difference in units of the combined standard error of two independent estimates.
    pub fn z_score(&self, other: &EstimateReport) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        if se == 0.0 {
            if self.point == other.point { 0.0 } else { f64::INFINITY }
        } else {
            (self.point - other.point) / se
        }
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
/// Sorts the sample in place.
pub fn ks_one_sample(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance. Sorts both samples in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
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

/// Asymptotic Kolmogorov quantile `c(level) = sqrt(-ln(level / 2) / 2)`.
pub fn kolmogorov_quantile(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

pub fn ks_critical_one_sample(n: usize, level: f64) -> f64 {
    kolmogorov_quantile(level) / (n as f64).sqrt()
}

pub fn ks_critical_two_sample(n: usize, m: usize, level: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_quantile(level) * ((n + m) / (n * m)).sqrt()
}
