//! Exact sampling of centered Gaussian vectors on a grid.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::correlation::CorrelationModel;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Negative circulant eigenvalues down to this size (relative to the variance)
/// are treated as rounding noise and clamped to zero.
const EIGEN_TOLERANCE: f64 = 1e-9;
const MAX_DOUBLINGS: u32 = 3;
const JITTER_STEPS: [f64; 3] = [1e-12, 1e-10, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    /// Circulant embedding with FFT; falls back to Cholesky when the embedding
    /// is not nonnegative definite.
    Circulant,
    Cholesky,
}

#[derive(Clone)]
enum Covariance {
    /// Stationary: `lags[k] = cov(X_i, X_{i+k})`.
    Toeplitz(Vec<f64>),
    /// Row-major `n x n`.
    Dense(Vec<f64>),
}

struct Circulant {
    size: usize,
    /// `sqrt(lambda_k / size)`
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

enum Factor {
    Circulant(Circulant),
    /// Row-major lower triangle, `n x n`.
    Cholesky(Vec<f64>),
}

pub struct GaussianSampler {
    n: usize,
    cov: Covariance,
    factor: Factor,
}

impl fmt::Debug for GaussianSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianSampler")
            .field("n", &self.n)
            .field("method", &self.method())
            .finish()
    }
}

/// Reusable buffers for [`GaussianSampler::sample_into`].
pub struct Scratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
    normals: Vec<f64>,
}

impl GaussianSampler {
    /// Stationary unit-variance process with correlation `model` on `grid`.
    pub fn stationary(model: &CorrelationModel, grid: &Grid) -> Result<Self> {
        Self::stationary_with(model, grid, Factorization::Circulant)
    }

    pub fn stationary_with(model: &CorrelationModel, grid: &Grid, method: Factorization) -> Result<Self> {
        let delta = grid.delta();
        for k in 1..grid.n_points() {
            if model.r(k as f64 * delta) >= 1.0 {
                return Err(Error::Precondition(format!(
                    "correlation equals 1 at lag {}; the process is constant on the grid",
                    k as f64 * delta
                )));
            }
        }
        Self::toeplitz(grid.n_points(), |k| model.r(k as f64 * delta), method)
    }

    /// Stationary covariance given by `lag(k)`, the covariance at `k` grid steps.
    /// `lag` may be evaluated beyond `n - 1` to build the circulant embedding.
    pub fn toeplitz(n: usize, lag: impl Fn(usize) -> f64, method: Factorization) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("cannot sample on an empty grid".into()));
        }
        let lags: Vec<f64> = (0..n).map(&lag).collect();
        if !(lags[0] > 0.0) || lags.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("covariance must be finite with positive variance".into()));
        }
        let cov = Covariance::Toeplitz(lags);
        if method == Factorization::Circulant {
            match circulant(n, &lag) {
                Ok(c) => return Ok(Self { n, cov, factor: Factor::Circulant(c) }),
                Err(min_eig) => log::warn!(
                    "circulant embedding not nonnegative definite (smallest eigenvalue {min_eig:.3e}); using Cholesky"
                ),
            }
        }
        let factor = Factor::Cholesky(cholesky_with_jitter(&dense_of(&cov, n), n)?);
        Ok(Self { n, cov, factor })
    }

    /// Arbitrary covariance matrix (row-major, `n x n`), factored by Cholesky.
    pub fn dense(cov: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || cov.len() != n * n {
            return Err(Error::Config(format!(
                "covariance needs {} entries for {n} points, got {}",
                n * n,
                cov.len()
            )));
        }
        if cov.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("covariance has non-finite entries".into()));
        }
        let factor = Factor::Cholesky(cholesky_with_jitter(&cov, n)?);
        Ok(Self { n, cov: Covariance::Dense(cov), factor })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn method(&self) -> Factorization {
        match self.factor {
            Factor::Circulant(_) => Factorization::Circulant,
            Factor::Cholesky(_) => Factorization::Cholesky,
        }
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        match &self.cov {
            Covariance::Toeplitz(lags) => lags[i.abs_diff(j)],
            Covariance::Dense(m) => m[i * self.n + j],
        }
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i)
    }

    pub fn scratch(&self) -> Scratch {
        match &self.factor {
            Factor::Circulant(c) => Scratch {
                buf: vec![Complex64::default(); c.size],
                fft: vec![Complex64::default(); c.fft.get_inplace_scratch_len()],
                normals: Vec::new(),
            },
            Factor::Cholesky(_) => Scratch {
                buf: Vec::new(),
                fft: Vec::new(),
                normals: vec![0.0; self.n],
            },
        }
    }

    /// Writes one draw into `out[..len()]`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, out: &mut [f64]) {
        let out = &mut out[..self.n];
        match &self.factor {
            Factor::Circulant(c) => {
                for (b, &s) in scratch.buf.iter_mut().zip(&c.scale) {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *b = Complex64::new(s * re, s * im);
                }
                c.fft.process_with_scratch(&mut scratch.buf, &mut scratch.fft);
                for (o, b) in out.iter_mut().zip(&scratch.buf) {
                    *o = b.re;
                }
            }
            Factor::Cholesky(l) => {
                for z in scratch.normals.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &l[i * self.n..i * self.n + i + 1];
                    *o = row.iter().zip(&scratch.normals).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.sample_into(rng, &mut self.scratch(), &mut out);
        out
    }
}

fn dense_of(cov: &Covariance, n: usize) -> Vec<f64> {
    match cov {
        Covariance::Toeplitz(lags) => {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = lags[i.abs_diff(j)];
                }
            }
            m
        }
        Covariance::Dense(m) => m.clone(),
    }
}

/// Builds the embedding, doubling its size a few times if needed.
/// On failure returns the smallest eigenvalue of the last attempt.
fn circulant(n: usize, lag: &impl Fn(usize) -> f64) -> std::result::Result<Circulant, f64> {
    let mut size = (2 * (n - 1)).max(1).next_power_of_two();
    let variance = lag(0);
    let mut planner = FftPlanner::new();
    let mut min_eig = f64::NEG_INFINITY;
    for _ in 0..=MAX_DOUBLINGS {
        let fft = planner.plan_fft_forward(size);
        let mut row: Vec<Complex64> = (0..size)
            .map(|j| Complex64::new(lag(j.min(size - j)), 0.0))
            .collect();
        fft.process(&mut row);
        min_eig = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min_eig >= -EIGEN_TOLERANCE * variance {
            if min_eig < 0.0 {
                log::warn!("clamping circulant eigenvalue {min_eig:.3e} to zero");
            }
            let scale = row.iter().map(|c| (c.re.max(0.0) / size as f64).sqrt()).collect();
            return Ok(Circulant { size, scale, fft });
        }
        size *= 2;
    }
    Err(min_eig)
}

fn cholesky(a: &[f64], n: usize) -> std::result::Result<Vec<f64>, usize> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(j);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_with_jitter(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let pivot = match cholesky(a, n) {
        Ok(l) => return Ok(l),
        Err(p) => p,
    };
    let scale = (0..n).map(|i| a[i * n + i]).sum::<f64>() / n as f64;
    for jitter in JITTER_STEPS {
        let mut b = a.to_vec();
        for i in 0..n {
            b[i * n + i] += jitter * scale;
        }
        if let Ok(l) = cholesky(&b, n) {
            log::warn!("covariance factored after adding {jitter:e} x variance to the diagonal");
            return Ok(l);
        }
    }
    let m = nalgebra::DMatrix::from_row_slice(n, n, a);
    let smallest = m.symmetric_eigenvalues().min();
    Err(Error::Simulation(format!(
        "covariance is not positive definite: Cholesky failed at index {pivot}, \
         smallest eigenvalue {smallest:.6e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WeightMode;
    use crate::seed::{Seeds, Stream};

    fn empirical_cov(s: &GaussianSampler, reps: u64) -> Vec<f64> {
        let n = s.len();
        let mut acc = vec![0.0; n * n];
        let mut scratch = s.scratch();
        let mut x = vec![0.0; n];
        let seeds = Seeds::new(5);
        for r in 0..reps {
            s.sample_into(&mut seeds.rng(Stream::Gaussian, r), &mut scratch, &mut x);
            for i in 0..n {
                for j in 0..n {
                    acc[i * n + j] += x[i] * x[j];
                }
            }
        }
        acc.iter().map(|v| v / reps as f64).collect()
    }

    #[test]
    fn circulant_reproduces_covariance() {
        let model = CorrelationModel::powered_exponential(1.0, 1.0).unwrap();
        let grid = Grid::new(0.5, 6, 0.0, WeightMode::Counting).unwrap();
        let s = GaussianSampler::stationary(&model, &grid).unwrap();
        assert_eq!(s.method(), Factorization::Circulant);
        let emp = empirical_cov(&s, 40_000);
        for i in 0..6 {
            for j in 0..6 {
                let want = model.r((i as f64 - j as f64) * 0.5);
                assert!((emp[i * 6 + j] - want).abs() < 0.03, "({i},{j})");
            }
        }
    }

    #[test]
    fn single_point_and_pairs() {
        let model = CorrelationModel::powered_exponential(2.0, 1.0).unwrap();
        for n in [1, 2, 3] {
            let grid = Grid::new(0.1, n, 0.0, WeightMode::Counting).unwrap();
            let s = GaussianSampler::stationary(&model, &grid).unwrap();
            let emp = empirical_cov(&s, 20_000);
            assert!((emp[0] - 1.0).abs() < 0.05, "n = {n}");
        }
    }

    #[test]
    fn constant_process_is_rejected() {
        let model = CorrelationModel::custom("flat", 1.0, 1.0, |t| if t < 1.0 { 1.0 } else { 0.5 }).unwrap();
        let grid = Grid::new(0.5, 4, 0.0, WeightMode::Counting).unwrap();
        assert!(matches!(
            GaussianSampler::stationary(&model, &grid),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn indefinite_covariance_reports_smallest_eigenvalue() {
        // cov = [[1, 2], [2, 1]] has eigenvalues 3 and -1.
        let err = GaussianSampler::dense(vec![1.0, 2.0, 2.0, 1.0], 2).unwrap_err();
        let msg = err.to_string();
        assert!(err.is_numerical());
        assert!(msg.contains("-1.0"), "{msg}");
    }

    #[test]
    fn cholesky_matches_known_factor() {
        let l = cholesky(&[4.0, 2.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(l, vec![2.0, 0.0, 1.0, 2f64.sqrt()]);
    }
}
