//! Single simulated paths, mainly for inspection and export.

use std::fmt::Write as _;

use serde::Serialize;

use super::conditional::ConditionalSampler;
use super::drift::{exp_mark, DriftedSampler};
use super::fbm::FbmSampler;
use super::gaussian::GaussianSampler;
use crate::correlation::CorrelationModel;
use crate::digest::short_digest;
use crate::error::{config, Result};
use crate::grid::Grid;
use crate::seed::{Seeds, Stream};

#[derive(Debug, Clone, Serialize)]
pub struct SamplePath {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub seed: u64,
    pub model_digest: String,
}

impl SamplePath {
    pub fn supremum(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Two columns, `t,value`, with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value\n");
        for (t, v) in self.grid.points().zip(&self.values) {
            let _ = writeln!(s, "{t},{v}");
        }
        s
    }
}

/// `b W(t)` on a grid together with its exponential mark `eta`.
#[derive(Debug, Clone, Serialize)]
pub struct DriftedPath {
    pub grid: Grid,
    pub alpha: f64,
    pub drift: f64,
    pub values: Vec<f64>,
    pub eta: f64,
    pub seed: u64,
}

impl DriftedPath {
    pub fn supremum(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value\n");
        for (t, v) in self.grid.points().zip(&self.values) {
            let _ = writeln!(s, "{t},{v}");
        }
        s
    }
}

pub fn fbm_path(alpha: f64, grid: &Grid, seed: u64) -> Result<SamplePath> {
    let sampler = FbmSampler::new(alpha, grid)?;
    let mut values = vec![0.0; grid.n_points()];
    sampler.sample_into(&mut Seeds::new(seed).rng(Stream::Gaussian, 0), &mut sampler.scratch(), &mut values);
    Ok(SamplePath {
        grid: grid.clone(),
        values,
        seed,
        model_digest: short_digest(&format!("fbm(alpha={alpha})")),
    })
}

pub fn stationary_path(model: &CorrelationModel, grid: &Grid, seed: u64) -> Result<SamplePath> {
    let sampler = GaussianSampler::stationary(model, grid)?;
    let values = sampler.sample(&mut Seeds::new(seed).rng(Stream::Gaussian, 0));
    Ok(SamplePath { grid: grid.clone(), values, seed, model_digest: short_digest(&model.describe()) })
}

/// A stationary path conditioned on `X(grid[pivot]) > level`.
pub fn conditional_path_exceeding(
    model: &CorrelationModel,
    grid: &Grid,
    pivot: usize,
    level: f64,
    seed: u64,
) -> Result<SamplePath> {
    let base = GaussianSampler::stationary(model, grid)?;
    let cond = ConditionalSampler::new(&base, pivot, level)?;
    let seeds = Seeds::new(seed);
    let mut values = vec![0.0; grid.n_points()];
    cond.sample_into(
        &mut seeds.rng(Stream::Gaussian, 0),
        &mut seeds.rng(Stream::Truncation, 0),
        &mut cond.scratch(),
        &mut values,
    );
    Ok(SamplePath {
        grid: grid.clone(),
        values,
        seed,
        model_digest: short_digest(&format!("{}|pivot={pivot}|level={level}", model.describe())),
    })
}

pub fn drifted_path(alpha: f64, drift: f64, grid: &Grid, seed: u64) -> Result<DriftedPath> {
    if !(drift >= 0.0 && drift.is_finite()) {
        return config(format!("drift parameter must be nonnegative, got {drift}"));
    }
    let sampler = DriftedSampler::new(alpha, grid)?;
    let seeds = Seeds::new(seed);
    let mut values = vec![0.0; grid.n_points()];
    sampler.sample_into(&mut seeds.rng(Stream::Gaussian, 0), &mut sampler.scratch(), &mut values);
    for v in values.iter_mut() {
        *v *= drift;
    }
    let eta = exp_mark(&mut seeds.rng(Stream::Exponential, 0));
    Ok(DriftedPath { grid: grid.clone(), alpha, drift, values, eta, seed })
}
