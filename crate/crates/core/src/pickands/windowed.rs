use super::PickandsSpec;
use crate::digest::short_digest;
use crate::error::{Error, Result};
use crate::grid::{Grid, WeightMode};
use crate::replicate::McOptions;
use crate::seed::{Seeds, Stream};
use crate::sim::{exp_mark, DriftedSampler};
use crate::stats::{EstimateReport, RunningStats};
use crate::window::{sliding_max, sliding_sum};

/// The finite-window constant
/// `H(T) = e^theta sum_{tau in K} E[1{sup_K W(. - tau) + eta > theta} / sum_K exp(b W(. - tau)) 1{W(. - tau) + eta > 0}]`
/// with `K = [0, T) ∩ delta Z`. All shifts reuse one path on `K - K`.
/// `H(T) / T` (diagnostic `per_unit`) tends to the lattice constant.
pub fn pickands_windowed(spec: &PickandsSpec, opts: &McOptions) -> Result<EstimateReport> {
    let delta = spec.delta;
    let t = spec.window;
    if !(delta > 0.0 && t > 0.0) {
        return Err(Error::Precondition("the windowed constant needs delta > 0 and T > 0".into()));
    }
    // The window may be shorter than the default minimum here.
    PickandsSpec { window: t.max(1.0), ..spec.clone() }.validate()?;
    opts.require_n(2, "pickands_windowed")?;
    let len = ((t / delta) - 1e-9).ceil().max(1.0) as usize;
    let grid = Grid::symmetric(delta, len - 1, WeightMode::Counting)?;
    let sampler = DriftedSampler::new(spec.alpha, &grid)?;
    let seeds = Seeds::new(opts.seed);
    let (b, theta) = (spec.drift, spec.theta);
    let scale = theta.exp();
    let out = opts.replicator.run::<RunningStats, _, _, _>(
        0..opts.n,
        || {
            let n = sampler.len();
            (sampler.scratch(), vec![0.0; n], vec![0.0; n], Vec::new(), Vec::new())
        },
        |(scratch, w, c, maxes, sums), r| {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, w);
            let eta = exp_mark(&mut seeds.rng(Stream::Exponential, r));
            for (ci, &v) in c.iter_mut().zip(w.iter()) {
                *ci = if v + eta > 0.0 { (b * v).exp() } else { 0.0 };
            }
            sliding_max(w, len, maxes);
            sliding_sum(c, len, sums);
            maxes
                .iter()
                .zip(sums.iter())
                .filter(|(m, _)| **m + eta > theta)
                .map(|(_, s)| scale / s)
                .sum::<f64>()
        },
    )?;
    let stats = out.acc;
    let span = len as f64 * delta;
    Ok(EstimateReport::from_stats("pickands_windowed", &stats, opts.seed)
        .with_digest(short_digest(&format!("pickands_windowed|alpha={}|delta={delta}|T={t}|b={b}|theta={theta}", spec.alpha)))
        .with_partial(out.partial)
        .param("alpha", spec.alpha)
        .param("delta", delta)
        .param("T", t)
        .param("b", b)
        .param("theta", theta)
        .diagnostic("per_unit", stats.mean() / span)
        .diagnostic("per_unit_se", stats.std_error() / span)
        .diagnostic("window_points", len as f64))
}
