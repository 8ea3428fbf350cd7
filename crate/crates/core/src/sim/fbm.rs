//! Fractional Brownian motion `B` with `Var B(t) = |t|^alpha`, pinned at `B(0) = 0`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::gaussian::{Factorization, GaussianSampler, Scratch};
use crate::error::{config, Result};
use crate::grid::Grid;

/// Covariance of fBm with index `alpha`.
pub fn fbm_covariance(alpha: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.abs().powf(alpha) + t.abs().powf(alpha) - (s - t).abs().powf(alpha))
}

enum Engine {
    /// `alpha = 2`: `B(t) = t Z`.
    Linear,
    /// Cumulative sums of stationary increments.
    Increments(GaussianSampler),
    /// Direct factorization of the covariance at the nonzero grid points.
    Direct { sampler: GaussianSampler, others: Vec<usize> },
}

pub struct FbmSampler {
    alpha: f64,
    grid: Grid,
    zero: usize,
    engine: Engine,
}

pub struct FbmScratch {
    inner: Option<Scratch>,
    buf: Vec<f64>,
}

impl FbmSampler {
    /// The grid must contain `t = 0` as a grid point.
    pub fn new(alpha: f64, grid: &Grid) -> Result<Self> {
        Self::with_method(alpha, grid, Factorization::Circulant)
    }

    /// `Cholesky` factors the full covariance instead of summing increments;
    /// it is meant for cross-checking on small grids.
    pub fn with_method(alpha: f64, grid: &Grid, method: Factorization) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return config(format!("alpha must lie in (0, 2], got {alpha}"));
        }
        let Some(zero) = grid.zero_index() else {
            return config("fractional Brownian motion needs a grid containing t = 0");
        };
        let n = grid.n_points();
        let engine = if alpha == 2.0 || n == 1 {
            Engine::Linear
        } else if method == Factorization::Circulant {
            let scale = grid.delta().powf(alpha);
            let inc = GaussianSampler::toeplitz(
                n - 1,
                |k| {
                    let k = k as f64;
                    0.5 * scale * ((k + 1.0).powf(alpha) - 2.0 * k.powf(alpha) + (k - 1.0).abs().powf(alpha))
                },
                Factorization::Circulant,
            )?;
            Engine::Increments(inc)
        } else {
            let others: Vec<usize> = (0..n).filter(|&i| i != zero).collect();
            let m = others.len();
            let mut cov = vec![0.0; m * m];
            for (a, &i) in others.iter().enumerate() {
                for (b, &j) in others.iter().enumerate() {
                    cov[a * m + b] = fbm_covariance(alpha, grid.point(i), grid.point(j));
                }
            }
            Engine::Direct { sampler: GaussianSampler::dense(cov, m)?, others }
        };
        Ok(Self { alpha, grid: grid.clone(), zero, engine })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn scratch(&self) -> FbmScratch {
        let (inner, len) = match &self.engine {
            Engine::Linear => (None, 0),
            Engine::Increments(s) => (Some(s.scratch()), s.len()),
            Engine::Direct { sampler, .. } => (Some(sampler.scratch()), sampler.len()),
        };
        FbmScratch { inner, buf: vec![0.0; len] }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut FbmScratch, out: &mut [f64]) {
        let n = self.grid.n_points();
        let out = &mut out[..n];
        match &self.engine {
            Engine::Linear => {
                if n == 1 {
                    out[0] = 0.0;
                    return;
                }
                let z: f64 = rng.sample(StandardNormal);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.grid.point(i) * z;
                }
            }
            Engine::Increments(s) => {
                let inner = scratch.inner.as_mut().expect("scratch built for this sampler");
                s.sample_into(rng, inner, &mut scratch.buf);
                out[0] = 0.0;
                for i in 1..n {
                    out[i] = out[i - 1] + scratch.buf[i - 1];
                }
                let pin = out[self.zero];
                for o in out.iter_mut() {
                    *o -= pin;
                }
            }
            Engine::Direct { sampler, others } => {
                let inner = scratch.inner.as_mut().expect("scratch built for this sampler");
                sampler.sample_into(rng, inner, &mut scratch.buf);
                for (&i, &v) in others.iter().zip(&scratch.buf) {
                    out[i] = v;
                }
            }
        }
        out[self.zero] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WeightMode;
    use crate::seed::{Seeds, Stream};

    fn check_covariance(alpha: f64, method: Factorization) {
        let grid = Grid::symmetric(0.5, 3, WeightMode::Counting).unwrap();
        let s = FbmSampler::with_method(alpha, &grid, method).unwrap();
        let n = grid.n_points();
        let mut scratch = s.scratch();
        let mut x = vec![0.0; n];
        let mut acc = vec![0.0; n * n];
        let reps = 30_000;
        let seeds = Seeds::new(9);
        for r in 0..reps {
            s.sample_into(&mut seeds.rng(Stream::Gaussian, r), &mut scratch, &mut x);
            assert_eq!(x[s.zero_index()], 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc[i * n + j] += x[i] * x[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let want = fbm_covariance(alpha, grid.point(i), grid.point(j));
                let got = acc[i * n + j] / reps as f64;
                assert!((got - want).abs() < 0.04 * (1.0 + want.abs()), "alpha {alpha} ({i},{j}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn covariance_for_each_method() {
        for alpha in [0.5, 1.0, 1.5, 2.0] {
            check_covariance(alpha, Factorization::Circulant);
        }
        check_covariance(1.0, Factorization::Cholesky);
    }

    #[test]
    fn grid_without_origin_is_rejected() {
        let grid = Grid::new(0.3, 4, 0.1, WeightMode::Counting).unwrap();
        assert!(FbmSampler::new(1.0, &grid).is_err());
    }
}
