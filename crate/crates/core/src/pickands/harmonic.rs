use super::extrapolate::{extrapolate_correlated, Extrapolation, FitScale};
use super::{require_nested, steps, symmetric_lattice, Continuum, PickandsSpec, CONTINUUM_LEVELS};
use crate::digest::short_digest;
use crate::error::{config, Error, Result};
use crate::replicate::McOptions;
use crate::seed::{Seeds, Stream};
use crate::sim::{exp_mark, DriftedSampler};
use crate::stats::{EstimateReport, MultiStats};

/// `e^theta 1{sup W + eta > theta} / (cell * sum exp(b W) 1{W + eta > 0})` over
/// the lattice points `zero + stride * j`, `|j| <= half`.
#[allow(clippy::too_many_arguments)]
fn harmonic_ratio(w: &[f64], zero: usize, stride: usize, half: usize, eta: f64, b: f64, theta: f64, cell: f64) -> f64 {
    let lo = zero - stride * half;
    let pts = w[lo..=zero + stride * half].iter().step_by(stride);
    let mut sup = f64::NEG_INFINITY;
    let mut denom = 0.0;
    for &v in pts {
        sup = sup.max(v);
        if v + eta > 0.0 {
            denom += (b * v).exp();
        }
    }
    if sup + eta > theta {
        // The origin always contributes exp(0) = 1, so denom >= 1.
        theta.exp() / (cell * denom)
    } else {
        0.0
    }
}

fn path_runner(
    spec: &PickandsSpec,
    delta: f64,
    half: usize,
) -> Result<DriftedSampler> {
    let grid = symmetric_lattice(half as f64 * delta, delta)?;
    debug_assert_eq!(grid.n_points(), 2 * half + 1);
    DriftedSampler::new(spec.alpha, &grid)
}

/// The harmonic representation at several `(b, theta)` pairs, all evaluated
/// on the same paths (common random numbers).
pub fn pickands_harmonic_sweep(
    spec: &PickandsSpec,
    pairs: &[(f64, f64)],
    opts: &McOptions,
) -> Result<Vec<EstimateReport>> {
    spec.validate()?;
    if spec.delta <= 0.0 {
        return Err(Error::Precondition("the lattice representation needs delta > 0".into()));
    }
    if pairs.is_empty() {
        return config("no (b, theta) pairs given");
    }
    for &(b, theta) in pairs {
        PickandsSpec { drift: b, theta, ..spec.clone() }.validate()?;
    }
    opts.require_n(2, "pickands_harmonic")?;
    let delta = spec.delta;
    let half = steps(spec.window, delta);
    let sampler = path_runner(spec, delta, half)?;
    let zero = sampler.zero_index();
    let seeds = Seeds::new(opts.seed);
    let out = opts.replicator.run::<MultiStats, _, _, _>(
        0..opts.n,
        || (sampler.scratch(), vec![0.0; sampler.len()]),
        |(scratch, w), r| {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, w);
            let eta = exp_mark(&mut seeds.rng(Stream::Exponential, r));
            pairs
                .iter()
                .map(|&(b, theta)| harmonic_ratio(w, zero, 1, half, eta, b, theta, delta))
                .collect()
        },
    )?;
    let digest = short_digest(&format!("pickands_harmonic|alpha={}|delta={delta}|T={}", spec.alpha, spec.window));
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(i, &(b, theta))| {
            EstimateReport::from_stats("pickands_harmonic", &out.acc.component(i), opts.seed)
                .with_digest(digest.clone())
                .with_partial(out.partial)
                .param("alpha", spec.alpha)
                .param("delta", delta)
                .param("b", b)
                .param("theta", theta)
                .param("T", spec.window)
                .diagnostic("grid_points", sampler.len() as f64)
        })
        .collect())
}

pub fn pickands_harmonic(spec: &PickandsSpec, opts: &McOptions) -> Result<EstimateReport> {
    let mut v = pickands_harmonic_sweep(spec, &[(spec.drift, spec.theta)], opts)?;
    Ok(v.remove(0))
}

/// The continuous constant (`delta = 0`): the harmonic ratio with a Riemann-sum
/// denominator on spacings `inner_delta * {4, 2, 1}` over shared paths,
/// extrapolated to zero spacing (see [`Continuum`]).
pub fn pickands_continuous(spec: &PickandsSpec, opts: &McOptions) -> Result<EstimateReport> {
    spec.validate()?;
    if spec.delta != 0.0 {
        return config("pickands_continuous needs delta = 0; use pickands_harmonic for lattice constants");
    }
    opts.require_n(2, "pickands_continuous")?;
    let inner = spec.inner_delta;
    let levels: &[usize] = match spec.continuum {
        Continuum::Extrapolated => &CONTINUUM_LEVELS,
        Continuum::FinestGrid => &[1],
    };
    let coarsest = levels[0];
    let half = match spec.continuum {
        Continuum::Extrapolated => require_nested(spec.window, inner, coarsest)?,
        Continuum::FinestGrid => steps(spec.window, inner),
    };
    let sampler = path_runner(spec, inner, half)?;
    let zero = sampler.zero_index();
    let seeds = Seeds::new(opts.seed);
    let (b, theta) = (spec.drift, spec.theta);
    let out = opts.replicator.run::<MultiStats, _, _, _>(
        0..opts.n,
        || (sampler.scratch(), vec![0.0; sampler.len()]),
        |(scratch, w), r| {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, w);
            let eta = exp_mark(&mut seeds.rng(Stream::Exponential, r));
            levels
                .iter()
                .map(|&k| harmonic_ratio(w, zero, k, half / k, eta, b, theta, k as f64 * inner))
                .collect()
        },
    )?;
    let acc = out.acc;
    let deltas: Vec<f64> = levels.iter().map(|&k| k as f64 * inner).collect();
    let (point, se) = if levels.len() == 1 {
        (acc.mean(0), acc.std_error(0))
    } else {
        let ext = Extrapolation { exponent: spec.alpha / 2.0, scale: FitScale::Log };
        extrapolate_correlated(&deltas, acc.means(), &acc.mean_covariance(), ext)?
    };
    let mut report = EstimateReport::new("pickands_continuous", point, se, acc.count(), opts.seed)
        .with_digest(short_digest(&format!(
            "pickands_continuous|alpha={}|inner={inner}|T={}|{:?}",
            spec.alpha, spec.window, spec.continuum
        )))
        .with_partial(out.partial)
        .param("alpha", spec.alpha)
        .param("delta", 0.0)
        .param("b", b)
        .param("theta", theta)
        .param("T", spec.window)
        .param("inner_delta", inner);
    for (i, d) in deltas.iter().enumerate() {
        report = report
            .diagnostic(&format!("h_at_{d}"), acc.mean(i))
            .diagnostic(&format!("se_at_{d}"), acc.std_error(i));
    }
    Ok(report)
}

/// The ratio form `E[sup exp(W) / (delta sum exp(W))]` on `[-T, T] ∩ delta Z`,
/// an independent cross-check of the lattice constant.
pub fn pickands_ratio(spec: &PickandsSpec, opts: &McOptions) -> Result<EstimateReport> {
    spec.validate()?;
    if spec.delta <= 0.0 {
        return Err(Error::Precondition("the ratio representation needs delta > 0".into()));
    }
    opts.require_n(2, "pickands_ratio")?;
    let delta = spec.delta;
    let half = steps(spec.window, delta);
    let sampler = path_runner(spec, delta, half)?;
    let seeds = Seeds::new(opts.seed);
    let out = opts.replicator.run::<crate::stats::RunningStats, _, _, _>(
        0..opts.n,
        || (sampler.scratch(), vec![0.0; sampler.len()]),
        |(scratch, w), r| {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, w);
            let sup = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // Scale by exp(-sup) to keep every term at most 1.
            let total: f64 = w.iter().map(|v| (v - sup).exp()).sum();
            1.0 / (delta * total)
        },
    )?;
    Ok(EstimateReport::from_stats("pickands_ratio", &out.acc, opts.seed)
        .with_digest(short_digest(&format!("pickands_ratio|alpha={}|delta={delta}|T={}", spec.alpha, spec.window)))
        .with_partial(out.partial)
        .param("alpha", spec.alpha)
        .param("delta", delta)
        .param("T", spec.window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::sojourn;
    use crate::occupation::WeightFunction;

    #[test]
    fn zero_drift_reduces_to_counting() {
        let w = [-3.0, -0.4, 0.0, -0.2, -5.0];
        let eta = 0.3;
        let got = harmonic_ratio(&w, 2, 1, 2, eta, 0.0, 0.0, 0.5);
        let shifted: Vec<f64> = w.iter().map(|v| v + eta).collect();
        let count = sojourn(&shifted, 0.5, &WeightFunction::indicator(0.0)).unwrap();
        assert_eq!(got, 1.0 / count);
    }

    #[test]
    fn b_zero_matches_hand_count_under_shared_seed() {
        let spec = PickandsSpec::new(1.5, 0.5).window(4.0);
        let opts = McOptions::new(200, 5);
        let est = pickands_harmonic(&spec, &opts).unwrap();
        let sampler = path_runner(&spec, 0.5, 8).unwrap();
        let seeds = Seeds::new(5);
        let mut stats = crate::stats::RunningStats::default();
        let mut scratch = sampler.scratch();
        let mut w = vec![0.0; 17];
        for r in 0..200 {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), &mut scratch, &mut w);
            let eta = exp_mark(&mut seeds.rng(Stream::Exponential, r));
            let count = w.iter().filter(|&&v| v + eta > 0.0).count();
            stats.push(1.0 / (0.5 * count as f64));
        }
        assert_eq!(est.point, stats.mean());
    }

    #[test]
    fn delta_zero_is_rejected_by_lattice_form() {
        let spec = PickandsSpec::new(1.0, 0.0);
        assert!(pickands_harmonic(&spec, &McOptions::new(10, 1)).is_err());
        assert!(pickands_continuous(&PickandsSpec::new(1.0, 0.5), &McOptions::new(10, 1)).is_err());
    }
}
