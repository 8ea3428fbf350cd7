//! Probing the difference between `P(sup X >= z)` and `P(sup X > z)`.
//!
//! The harmonic identity with sojourns above `z` identifies `P(sup X > z)`.
//! It can only recover `P(sup X >= z)` when the supremum has no atom at `z`,
//! and when every path reaching `z` spends positive time at or above it.

use rand::Rng;

use crate::digest::short_digest;
use crate::error::Result;
use crate::grid::Grid;
use crate::replicate::McOptions;
use crate::seed::{Seeds, Stream};
use crate::sim::GaussianSampler;
use crate::occupation::supremum;
use crate::stats::{EstimateReport, MultiStats};

/// What a probe needs from one path at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub sup: f64,
    /// Measure of `{t : X(t) >= z}`.
    pub sojourn_at_or_above: f64,
    /// Measure of `{t : X(t) > z}`.
    pub sojourn_above: f64,
}

pub trait ProbeProcess: Sync {
    fn probe(&self, z: f64, seeds: &Seeds, replicate: u64) -> ProbeSample;
    fn describe(&self) -> String;
}

/// A Gaussian vector on a grid; sojourns are cell counts times the grid weight.
pub struct GaussianProbe {
    sampler: GaussianSampler,
    cell: f64,
}

impl GaussianProbe {
    pub fn new(sampler: GaussianSampler, grid: &Grid) -> Self {
        Self { sampler, cell: grid.weight() }
    }
}

impl ProbeProcess for GaussianProbe {
    fn probe(&self, z: f64, seeds: &Seeds, replicate: u64) -> ProbeSample {
        let x = self.sampler.sample(&mut seeds.rng(Stream::Gaussian, replicate));
        let geq = x.iter().filter(|&&v| v >= z).count() as f64;
        let gt = x.iter().filter(|&&v| v > z).count() as f64;
        ProbeSample { sup: supremum(&x), sojourn_at_or_above: self.cell * geq, sojourn_above: self.cell * gt }
    }

    fn describe(&self) -> String {
        format!("gaussian(n={},cell={})", self.sampler.len(), self.cell)
    }
}

/// On `[start, end] ⊆ [0, 1]`, with `U` uniform on `[-1, 1]`:
/// `X(t) = 2` if `U < 0`, else `X(t) = cos(t - U)`.
///
/// On the cosine branch the supremum 1 is attained only at `t = U`, a null
/// set, so `P(sup X >= 1) = 1` while the sojourn at or above 1 is zero with
/// probability 1/2.
#[derive(Debug, Clone, Copy)]
pub struct LifshitsProcess {
    start: f64,
    end: f64,
}

impl LifshitsProcess {
    pub fn on_unit_interval() -> Self {
        Self { start: 0.0, end: 1.0 }
    }

    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(0.0 <= start && start < end && end <= 1.0) {
            return crate::error::config(format!("interval [{start}, {end}] must lie in [0, 1]"));
        }
        Ok(Self { start, end })
    }

    pub fn draw_u<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        2.0 * rng.random::<f64>() - 1.0
    }

    pub fn value(u: f64, t: f64) -> f64 {
        if u < 0.0 { 2.0 } else { (t - u).cos() }
    }

    pub fn path(u: f64, grid: &Grid) -> Vec<f64> {
        grid.points().map(|t| Self::value(u, t)).collect()
    }

    /// Exact supremum and sojourns for a given `u`.
    pub fn sample_for(&self, u: f64, z: f64) -> ProbeSample {
        let len = self.end - self.start;
        if u < 0.0 {
            let geq = if 2.0 >= z { len } else { 0.0 };
            let gt = if 2.0 > z { len } else { 0.0 };
            return ProbeSample { sup: 2.0, sojourn_at_or_above: geq, sojourn_above: gt };
        }
        let gap = if u < self.start {
            self.start - u
        } else if u > self.end {
            u - self.end
        } else {
            0.0
        };
        let sup = gap.cos();
        // |t - u| <= 2 < pi, so cos(t - u) >= z iff |t - u| <= acos(z).
        let measure = |z: f64| {
            if z > 1.0 {
                return 0.0;
            }
            let w = z.max(-1.0).acos();
            ((u + w).min(self.end) - (u - w).max(self.start)).max(0.0)
        };
        // Level sets of the cosine are null, so both sojourns agree.
        let m = measure(z);
        ProbeSample { sup, sojourn_at_or_above: m, sojourn_above: m }
    }
}

impl ProbeProcess for LifshitsProcess {
    fn probe(&self, z: f64, seeds: &Seeds, replicate: u64) -> ProbeSample {
        let u = Self::draw_u(&mut seeds.rng(Stream::Uniform, replicate));
        self.sample_for(u, z)
    }

    fn describe(&self) -> String {
        format!("lifshits([{},{}])", self.start, self.end)
    }
}

#[derive(Debug, Clone)]
pub struct ContinuityProbe {
    /// Frequency of `{sup X >= z}`.
    pub p_geq: EstimateReport,
    /// Frequency of positive sojourn strictly above `z`: the quantity the
    /// harmonic identity recovers, which equals `P(sup X > z)`.
    pub p_gt: EstimateReport,
    /// Frequency of positive sojourn at or above `z`.
    pub p_sojourn_geq: EstimateReport,
    /// `p_geq - p_gt`, with a paired standard error.
    pub atom_gap: EstimateReport,
    /// Frequency of `{sup X >= z}` with zero sojourn at or above `z`.
    pub reach_without_sojourn: EstimateReport,
}

pub fn continuity_probe<P: ProbeProcess + ?Sized>(process: &P, z: f64, opts: &McOptions) -> Result<ContinuityProbe> {
    opts.require_n(2, "the continuity probe")?;
    let seeds = Seeds::new(opts.seed);
    let out = opts.replicator.run::<MultiStats, _, _, _>(
        0..opts.n,
        || (),
        |_, r| {
            let s = process.probe(z, &seeds, r);
            let reach = s.sup >= z;
            vec![
                f64::from(u8::from(reach)),
                f64::from(u8::from(s.sojourn_above > 0.0)),
                f64::from(u8::from(s.sojourn_at_or_above > 0.0)),
                f64::from(u8::from(reach && s.sojourn_at_or_above == 0.0)),
            ]
        },
    )?;
    let acc = out.acc;
    let digest = short_digest(&format!("probe|{}|z={z}", process.describe()));
    let report = |name: &str, i: usize| {
        EstimateReport::from_stats(name, &acc.component(i), opts.seed)
            .with_digest(digest.clone())
            .with_partial(out.partial)
            .param("z", z)
    };
    let gap = acc.mean(0) - acc.mean(1);
    Ok(ContinuityProbe {
        p_geq: report("p_geq", 0),
        p_gt: report("p_gt", 1),
        p_sojourn_geq: report("p_sojourn_geq", 2),
        atom_gap: EstimateReport::new("atom_gap", gap, acc.linear_std_error(&[1.0, -1.0, 0.0, 0.0]), acc.count(), opts.seed)
            .with_digest(digest.clone())
            .with_partial(out.partial)
            .param("z", z),
        reach_without_sojourn: report("reach_without_sojourn", 3),
    })
}

/// Frequency of paths of [`LifshitsProcess`] on `[0, 1]` that reach level 1
/// without spending positive time at or above it (exact value 1/2).
pub fn lifshits_counterexample(opts: &McOptions) -> Result<EstimateReport> {
    let probe = continuity_probe(&LifshitsProcess::on_unit_interval(), 1.0, opts)?;
    let mut r = probe.reach_without_sojourn;
    r.method = "lifshits_counterexample".into();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches_of_the_counterexample() {
        let p = LifshitsProcess::on_unit_interval();
        let flat = p.sample_for(-0.3, 1.0);
        assert_eq!(flat.sup, 2.0);
        assert_eq!(flat.sojourn_at_or_above, 1.0);
        let wave = p.sample_for(0.4, 1.0);
        assert_eq!(wave.sup, 1.0);
        assert_eq!(wave.sojourn_at_or_above, 0.0);
        // cos(t - 0.4) >= cos(0.2) on [0.2, 0.6]
        let lower = p.sample_for(0.4, 0.2f64.cos());
        assert!((lower.sojourn_above - 0.4).abs() < 1e-12);
        let grid = Grid::unit_interval(11, crate::grid::WeightMode::Lebesgue).unwrap();
        let path = LifshitsProcess::path(0.4, &grid);
        assert!((path[4] - 1.0).abs() < 1e-15);
        assert!(path.iter().all(|&v| v <= 1.0));
    }

    #[test]
    fn probe_estimates_are_consistent() {
        let r = continuity_probe(&LifshitsProcess::on_unit_interval(), 1.0, &McOptions::new(4000, 8)).unwrap();
        assert_eq!(r.p_geq.point, 1.0);
        assert!((r.atom_gap.point - r.reach_without_sojourn.point).abs() < 1e-12);
        assert!(r.atom_gap.contains(0.5));
        let l = lifshits_counterexample(&McOptions::new(4000, 8)).unwrap();
        assert!(l.contains(0.5));
    }
}
