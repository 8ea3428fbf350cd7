//! Exceedance probabilities `P(sup X > z)` from the harmonic mean identity.
//!
//! For each grid point `t` a path is drawn conditionally on `X(t)` exceeding
//! the weight threshold, and the reciprocal of its weighted sojourn is averaged.
//! Summing `P(X(t) > threshold) E[f(X(t)) 1{sup X > z} / L]` over `t` gives the
//! probability without ever simulating the (rare) unconditional event.

mod probe;

use std::sync::OnceLock;

pub use probe::{
    continuity_probe, lifshits_counterexample, ContinuityProbe, GaussianProbe, LifshitsProcess, ProbeProcess,
    ProbeSample,
};

use crate::correlation::CorrelationModel;
use crate::digest::short_digest;
use crate::error::{Error, Result};
use crate::grid::{Grid, WeightMode};
use crate::normal;
use crate::replicate::McOptions;
use crate::seed::{Seeds, Stream};
use crate::sim::{ConditionalSampler, GaussianSampler};
use crate::occupation::{supremum, WeightFunction};
use crate::stats::{EstimateReport, RunningStats};
use crate::window::{sliding_max, sliding_sum};

/// Runs one conditional estimator per grid point and sums the tail-weighted means.
fn sum_over_points(
    sampler: &GaussianSampler,
    threshold: f64,
    opts: &McOptions,
    value: impl Fn(usize, &[f64]) -> f64 + Sync + Send,
) -> Result<(f64, f64, u64, bool)> {
    let n = sampler.len();
    opts.require_n(n as u64, "the harmonic estimator (one replicate per grid point)")?;
    let per = opts.n / n as u64;
    let seeds = Seeds::new(opts.seed);
    let (mut point, mut var, mut used, mut partial) = (0.0, 0.0, 0u64, false);
    for i in 0..n {
        let cond = ConditionalSampler::new(sampler, i, threshold)?;
        let start = i as u64 * per;
        let out = opts.replicator.run::<RunningStats, _, _, _>(
            start..start + per,
            || (cond.scratch(), vec![0.0; n]),
            |(scratch, x), r| {
                cond.sample_into(
                    &mut seeds.rng(Stream::Gaussian, r),
                    &mut seeds.rng(Stream::Truncation, r),
                    scratch,
                    x,
                );
                value(i, x)
            },
        )?;
        partial |= out.partial;
        used += out.completed;
        if out.completed == 0 {
            continue;
        }
        let tail = cond.tail();
        point += tail * out.acc.mean();
        var += tail * tail * out.acc.std_error().powi(2);
    }
    Ok((point, var.sqrt(), used, partial))
}

fn finish(
    method: &str,
    (point, se, used, partial): (f64, f64, u64, bool),
    seed: u64,
    describe: String,
) -> EstimateReport {
    EstimateReport::new(method, point, se, used, seed)
        .with_digest(short_digest(&describe))
        .with_partial(partial)
        .as_probability()
}

/// `P(max X > z)` on a finite grid with counting measure: the sojourn is the
/// number of points above `z`.
pub fn exceedance_discrete(sampler: &GaussianSampler, z: f64, opts: &McOptions) -> Result<EstimateReport> {
    let parts = sum_over_points(sampler, z, opts, |_, x| {
        let count = x.iter().filter(|&&v| v > z).count();
        1.0 / count as f64
    })?;
    Ok(finish("harmonic_discrete", parts, opts.seed, format!("discrete|z={z}|n={}", sampler.len()))
        .param("z", z)
        .diagnostic("grid_points", sampler.len() as f64))
}

/// `P(max X > z)` with a weighted sojourn `L = sum f(X_j) 1{X_j > threshold}`,
/// `threshold <= z`. The grid cell weight enters both the outer sum and `L`,
/// so it cancels and is not needed here.
///
/// With `f = indicator(z)` this coincides, draw for draw, with
/// [`exceedance_discrete`] under the same seed.
pub fn exceedance_continuous(
    sampler: &GaussianSampler,
    z: f64,
    f: &WeightFunction,
    opts: &McOptions,
) -> Result<EstimateReport> {
    let kappa = f.threshold();
    if kappa > z {
        return Err(Error::Precondition(format!("weight threshold {kappa} exceeds level {z}")));
    }
    let failure = OnceLock::new();
    let parts = sum_over_points(sampler, kappa, opts, |i, x| {
        if kappa < z && supremum(x) <= z {
            return 0.0;
        }
        let mut total = 0.0;
        for &v in x.iter() {
            match f.eval_checked(v) {
                Ok(w) => total += w,
                Err(e) => {
                    let _ = failure.set(e);
                    return f64::NAN;
                }
            }
        }
        f.eval(x[i]) / total
    })?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(finish(
        "harmonic_continuous",
        parts,
        opts.seed,
        format!("continuous|z={z}|f={}|n={}", f.describe(), sampler.len()),
    )
    .param("z", z)
    .param("kappa", kappa)
    .diagnostic("grid_points", sampler.len() as f64))
}

/// `P(max X > z)` for a stationary unit-variance process on `grid`, using
/// shift invariance: one conditional path on the doubled grid centered at the
/// conditioning point serves every position of the original window.
pub fn exceedance_stationary(
    model: &CorrelationModel,
    grid: &Grid,
    z: f64,
    f: &WeightFunction,
    opts: &McOptions,
) -> Result<EstimateReport> {
    let kappa = f.threshold();
    if kappa > z {
        return Err(Error::Precondition(format!("weight threshold {kappa} exceeds level {z}")));
    }
    opts.require_n(1, "the stationary harmonic estimator")?;
    let n = grid.n_points();
    let wide = Grid::new(grid.delta(), 2 * n - 1, -((n - 1) as f64) * grid.delta(), WeightMode::Counting)?;
    let base = GaussianSampler::stationary(model, &wide)?;
    let center = n - 1;
    let cond = ConditionalSampler::new(&base, center, kappa)?;
    let seeds = Seeds::new(opts.seed);
    let failure = OnceLock::new();
    struct Buf {
        x: Vec<f64>,
        w: Vec<f64>,
        maxes: Vec<f64>,
        sums: Vec<f64>,
    }
    let out = opts.replicator.run::<RunningStats, _, _, _>(
        0..opts.n,
        || {
            (
                cond.scratch(),
                Buf { x: vec![0.0; 2 * n - 1], w: vec![0.0; 2 * n - 1], maxes: Vec::new(), sums: Vec::new() },
            )
        },
        |(scratch, b), r| {
            cond.sample_into(
                &mut seeds.rng(Stream::Gaussian, r),
                &mut seeds.rng(Stream::Truncation, r),
                scratch,
                &mut b.x,
            );
            for (w, &v) in b.w.iter_mut().zip(&b.x) {
                match f.eval_checked(v) {
                    Ok(fw) => *w = fw,
                    Err(e) => {
                        let _ = failure.set(e);
                        return f64::NAN;
                    }
                }
            }
            sliding_max(&b.x, n, &mut b.maxes);
            sliding_sum(&b.w, n, &mut b.sums);
            let f0 = b.w[center];
            let mut acc = 0.0;
            for (m, s) in b.maxes.iter().zip(&b.sums) {
                if *m > z {
                    // Every window contains the center, so s >= f0 > 0.
                    acc += f0 / s;
                }
            }
            acc
        },
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let tail = normal::sf(kappa);
    let stats = out.acc;
    Ok(EstimateReport::new("harmonic_stationary", tail * stats.mean(), tail * stats.std_error(), out.completed, opts.seed)
        .with_digest(short_digest(&format!(
            "stationary|{}|z={z}|f={}|delta={}|n={n}",
            model.describe(),
            f.describe(),
            grid.delta()
        )))
        .with_partial(out.partial)
        .as_probability()
        .param("z", z)
        .param("kappa", kappa)
        .diagnostic("grid_points", n as f64))
}

/// Crude frequency of `{max X > z}`. With no exceedances the upper bound is
/// the exact one-sided 95% binomial bound `1 - 0.05^(1/n)`.
pub fn naive_mc(sampler: &GaussianSampler, z: f64, opts: &McOptions) -> Result<EstimateReport> {
    opts.require_n(1, "naive Monte Carlo")?;
    let n = sampler.len();
    let seeds = Seeds::new(opts.seed);
    let out = opts.replicator.run::<RunningStats, _, _, _>(
        0..opts.n,
        || (sampler.scratch(), vec![0.0; n]),
        |(scratch, x), r| {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, x);
            f64::from(u8::from(supremum(x) > z))
        },
    )?;
    let m = out.completed;
    let p = out.acc.mean();
    let se = (p * (1.0 - p) / m.max(1) as f64).sqrt();
    let mut report = EstimateReport::new("naive_mc", p, se, m, opts.seed)
        .with_digest(short_digest(&format!("naive|z={z}|n={n}")))
        .with_partial(out.partial)
        .param("z", z);
    if m > 0 && p == 0.0 {
        report.ci95 = [0.0, 1.0 - 0.05f64.powf(1.0 / m as f64)];
        report = report.diagnostic("one_sided_bound", 1.0);
    } else if m > 0 && p == 1.0 {
        report.ci95 = [0.05f64.powf(1.0 / m as f64), 1.0];
        report = report.diagnostic("one_sided_bound", 1.0);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (CorrelationModel, Grid, GaussianSampler) {
        let model = CorrelationModel::powered_exponential(1.0, 1.0).unwrap();
        let grid = Grid::unit_interval(8, WeightMode::Counting).unwrap();
        let s = GaussianSampler::stationary(&model, &grid).unwrap();
        (model, grid, s)
    }

    #[test]
    fn single_point_is_exact() {
        let model = CorrelationModel::powered_exponential(1.0, 1.0).unwrap();
        let grid = Grid::new(1.0, 1, 0.0, WeightMode::Counting).unwrap();
        let s = GaussianSampler::stationary(&model, &grid).unwrap();
        let r = exceedance_discrete(&s, 2.0, &McOptions::new(10, 1)).unwrap();
        assert_eq!(r.point, normal::sf(2.0));
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn continuous_indicator_equals_discrete_bitwise() {
        let (_, _, s) = small();
        let opts = McOptions::new(4000, 77);
        let d = exceedance_discrete(&s, 2.0, &opts).unwrap();
        let c = exceedance_continuous(&s, 2.0, &WeightFunction::indicator(2.0), &opts).unwrap();
        assert_eq!(d.point.to_bits(), c.point.to_bits());
    }

    #[test]
    fn threshold_above_level_is_rejected() {
        let (model, grid, s) = small();
        let f = WeightFunction::indicator(2.5);
        let opts = McOptions::new(100, 1);
        assert!(matches!(exceedance_continuous(&s, 2.0, &f, &opts), Err(Error::Precondition(_))));
        assert!(matches!(exceedance_stationary(&model, &grid, 2.0, &f, &opts), Err(Error::Precondition(_))));
    }

    #[test]
    fn too_few_replicates_is_config_error() {
        let (_, _, s) = small();
        assert!(matches!(exceedance_discrete(&s, 2.0, &McOptions::new(3, 1)), Err(Error::Config(_))));
    }

    #[test]
    fn naive_zero_hits_reports_one_sided_bound() {
        let (_, _, s) = small();
        let r = naive_mc(&s, 30.0, &McOptions::new(1000, 1)).unwrap();
        assert_eq!(r.point, 0.0);
        assert!((r.ci95_high() - (1.0 - 0.05f64.powf(1e-3))).abs() < 1e-15);
    }

    #[test]
    fn stationary_agrees_with_discrete() {
        let (model, grid, s) = small();
        let a = exceedance_discrete(&s, 2.5, &McOptions::new(16_000, 3)).unwrap();
        let b = exceedance_stationary(&model, &grid, 2.5, &WeightFunction::indicator(2.5), &McOptions::new(4000, 4))
            .unwrap();
        assert!(a.z_score(&b).abs() < 4.0, "{} vs {}", a.point, b.point);
    }

    #[test]
    fn overflowing_weight_surfaces_as_error() {
        let (_, _, s) = small();
        let f = WeightFunction::exponential(400.0, 2.0);
        let err = exceedance_continuous(&s, 2.0, &f, &McOptions::new(80, 1)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteWeight { .. }));
    }
}
