use crate::digest::short_digest;
use crate::error::{config, Result};
use crate::grid::{Grid, WeightMode};
use crate::replicate::McOptions;
use crate::seed::{Seeds, Stream};
use crate::sim::{exp_mark, DriftedSampler};
use crate::stats::{EstimateReport, RunningStats};

/// A function `g` known on a lattice through the origin.
#[derive(Debug, Clone, Copy)]
pub struct LatticeView<'a> {
    values: &'a [f64],
    zero: usize,
}

impl<'a> LatticeView<'a> {
    pub fn new(values: &'a [f64], zero: usize) -> Self {
        Self { values, zero }
    }

    /// `g(k * spacing)`, if it lies on the stored stretch.
    pub fn at(&self, k: isize) -> Option<f64> {
        let i = self.zero as isize + k;
        (0..self.values.len() as isize).contains(&i).then(|| self.values[i as usize])
    }

    pub fn origin(&self) -> f64 {
        self.values[self.zero]
    }
}

/// A nonnegative functional of a path.
pub trait PathFunctional: Sync {
    fn eval(&self, g: &LatticeView<'_>) -> f64;
    fn describe(&self) -> String;
}

/// `F(g) = min(1, g(0))`
#[derive(Debug, Clone, Copy, Default)]
pub struct OriginCap;

impl PathFunctional for OriginCap {
    fn eval(&self, g: &LatticeView<'_>) -> f64 {
        g.origin().min(1.0)
    }

    fn describe(&self) -> String {
        "min(1,g(0))".into()
    }
}

#[derive(Debug, Clone)]
pub struct ShiftIdentity {
    pub lhs: EstimateReport,
    pub rhs: EstimateReport,
}

impl ShiftIdentity {
    /// `(lhs - rhs)` in units of the combined standard error (0 when both are exact and equal).
    pub fn z_score(&self) -> f64 {
        self.lhs.z_score(&self.rhs)
    }
}

/// Both sides of
/// `E[F(x e^{eta + W}) 1{W(h) + eta > -ln x}] = x E[F(e^{eta + W(. - h)}) 1{W(-h) + eta > ln x}]`
/// with `F(g) = min(1, g(0))`. The sides use independent random streams.
pub fn shift_identity_check(alpha: f64, h: f64, x: f64, opts: &McOptions) -> Result<ShiftIdentity> {
    shift_identity_check_with(alpha, h, x, &OriginCap, opts)
}

pub fn shift_identity_check_with(
    alpha: f64,
    h: f64,
    x: f64,
    functional: &dyn PathFunctional,
    opts: &McOptions,
) -> Result<ShiftIdentity> {
    if !(x > 0.0 && x.is_finite()) {
        return config(format!("x must be positive, got {x}"));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return config(format!("shift h must be nonnegative, got {h}"));
    }
    opts.require_n(2, "shift_identity_check")?;
    // The lattice {-h, 0, h}; the shift by h moves the origin one step.
    let (grid, step) = if h == 0.0 {
        (Grid::new(1.0, 1, 0.0, WeightMode::Counting)?, 0usize)
    } else {
        (Grid::symmetric(h, 1, WeightMode::Counting)?, 1)
    };
    let sampler = DriftedSampler::new(alpha, &grid)?;
    let zero = sampler.zero_index();
    let root = Seeds::new(opts.seed);
    let ln_x = x.ln();
    let side = |seeds: Seeds, lhs: bool| -> Result<(RunningStats, bool)> {
        let out = opts.replicator.run::<RunningStats, _, _, _>(
            0..opts.n,
            || (sampler.scratch(), vec![0.0; sampler.len()], vec![0.0; sampler.len()]),
            |(scratch, w, g), r| {
                sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, w);
                let eta = exp_mark(&mut seeds.rng(Stream::Exponential, r));
                if lhs {
                    for (gi, wi) in g.iter_mut().zip(w.iter()) {
                        *gi = x * (eta + wi).exp();
                    }
                    let hit = w[zero + step] + eta > -ln_x;
                    if hit { functional.eval(&LatticeView::new(g, zero)) } else { 0.0 }
                } else {
                    for (gi, wi) in g.iter_mut().zip(w.iter()) {
                        *gi = (eta + wi).exp();
                    }
                    // (B^h g)(t) = g(t - h): the shifted origin sits one step left.
                    let hit = w[zero - step] + eta > ln_x;
                    if hit { x * functional.eval(&LatticeView::new(g, zero - step)) } else { 0.0 }
                }
            },
        )?;
        Ok((out.acc, out.partial))
    };
    let (l, lp) = side(root.derive("lhs"), true)?;
    let (r, rp) = side(root.derive("rhs"), false)?;
    let digest = short_digest(&format!("shift|alpha={alpha}|h={h}|x={x}|{}", functional.describe()));
    let wrap = |name: &str, s: &RunningStats, partial: bool| {
        EstimateReport::from_stats(name, s, opts.seed)
            .with_digest(digest.clone())
            .with_partial(partial)
            .param("alpha", alpha)
            .param("h", h)
            .param("x", x)
    };
    Ok(ShiftIdentity { lhs: wrap("shift_lhs", &l, lp), rhs: wrap("shift_rhs", &r, rp) })
}
