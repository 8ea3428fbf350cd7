use super::{steps, PickandsSpec};
use crate::digest::short_digest;
use crate::error::{Error, Result};
use crate::grid::{Grid, WeightMode};
use crate::replicate::McOptions;
use crate::seed::{Seeds, Stream};
use crate::sim::{exp_mark, DriftedSampler};
use crate::stats::{EstimateReport, RunningStats};

/// `delta H = P(sup_{k >= 1} W(k delta) + eta <= 0)`, with the lattice
/// truncated to `{delta, 2 delta, ..., T}`. The origin is excluded: `W(0) = 0`
/// and `eta > 0` would make the event impossible.
pub fn pickands_probability(spec: &PickandsSpec, opts: &McOptions) -> Result<EstimateReport> {
    spec.validate()?;
    let delta = spec.delta;
    if delta <= 0.0 {
        return Err(Error::Precondition("the probability representation needs delta > 0".into()));
    }
    opts.require_n(2, "pickands_probability")?;
    let m = steps(spec.window, delta);
    if m == 0 {
        return Err(Error::Config(format!(
            "truncated grid {{delta, ..., T}} is empty for delta = {delta}, T = {}",
            spec.window
        )));
    }
    let grid = Grid::new(delta, m + 1, 0.0, WeightMode::Counting)?;
    let sampler = DriftedSampler::new(spec.alpha, &grid)?;
    let seeds = Seeds::new(opts.seed);
    let out = opts.replicator.run::<RunningStats, _, _, _>(
        0..opts.n,
        || (sampler.scratch(), vec![0.0; m + 1]),
        |(scratch, w), r| {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, w);
            let eta = exp_mark(&mut seeds.rng(Stream::Exponential, r));
            let sup = w[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if sup + eta <= 0.0 { 1.0 / delta } else { 0.0 }
        },
    )?;
    let stats = out.acc;
    let mass = stats.mean() * delta;
    if !(0.0..=1.0).contains(&mass) {
        return Err(Error::Simulation(format!("probability estimate {mass} outside [0, 1]")));
    }
    Ok(EstimateReport::from_stats("pickands_probability", &stats, opts.seed)
        .with_digest(short_digest(&format!(
            "pickands_probability|alpha={}|delta={delta}|T={}",
            spec.alpha, spec.window
        )))
        .with_partial(out.partial)
        .param("alpha", spec.alpha)
        .param("delta", delta)
        .param("T", spec.window)
        .diagnostic("delta_times_h", mass)
        .diagnostic("grid_points", m as f64))
}
