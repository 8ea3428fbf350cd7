//! Sampling a Gaussian vector conditioned on one coordinate exceeding a level.

use rand::Rng;

use super::gaussian::{GaussianSampler, Scratch};
use crate::error::{config, Result};
use crate::normal::TruncatedNormal;

/// Draws `X | X_p > level` exactly: an unconditional draw `X'` is corrected by
/// kriging, `X = X' + cov(., p) / var(p) * (x - X'_p)`, with `x` drawn from the
/// truncated marginal of `X_p`.
pub struct ConditionalSampler<'a> {
    base: &'a GaussianSampler,
    pivot: usize,
    sd: f64,
    trunc: TruncatedNormal,
    regress: Vec<f64>,
}

impl<'a> ConditionalSampler<'a> {
    pub fn new(base: &'a GaussianSampler, pivot: usize, level: f64) -> Result<Self> {
        if pivot >= base.len() {
            return config(format!("pivot {pivot} outside grid of {} points", base.len()));
        }
        let var = base.variance(pivot);
        let sd = var.sqrt();
        let trunc = TruncatedNormal::above(level / sd)?;
        let regress = (0..base.len()).map(|j| base.covariance(j, pivot) / var).collect();
        Ok(Self { base, pivot, sd, trunc, regress })
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// `P(X_p > level)`
    pub fn tail(&self) -> f64 {
        self.trunc.tail()
    }

    pub fn scratch(&self) -> Scratch {
        self.base.scratch()
    }

    pub fn sample_into<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        path_rng: &mut R1,
        level_rng: &mut R2,
        scratch: &mut Scratch,
        out: &mut [f64],
    ) {
        self.base.sample_into(path_rng, scratch, out);
        let x = self.sd * self.trunc.sample(level_rng);
        let shift = x - out[self.pivot];
        for (o, r) in out.iter_mut().zip(&self.regress) {
            *o += r * shift;
        }
        out[self.pivot] = x;
    }
}
