//! Checks of the high-level asymptotics of stationary Gaussian processes:
//! the exceedance probability over `[0, T_z]` against
//! `C^(1/alpha) H T_z z^(2/alpha) P(X > z)`, and the conditional limit
//! `z (X(q t) - z) | X(0) > z  =>  W(C^(1/alpha) t) + eta` with `q = z^(-2/alpha)`.

use serde::Serialize;

use crate::correlation::CorrelationModel;
use crate::error::{config, Result};
use crate::grid::{Grid, WeightMode};
use crate::harmonic::exceedance_stationary;
use crate::normal;
use crate::quadrature::integrate_to_infinity;
use crate::replicate::{Collect, McOptions, Replicator};
use crate::seed::{Seeds, Stream};
use crate::sim::{exp_mark, fbm_covariance, ConditionalSampler, GaussianSampler};
use crate::occupation::WeightFunction;
use crate::stats::{ks_critical_one_sample, ks_critical_two_sample, ks_one_sample, ks_two_sample, EstimateReport};

/// Lattice spacing used when a scenario asks for `delta = 0`.
pub const FINE_DELTA: f64 = 0.05;
pub const DEFAULT_LEVELS: [f64; 4] = [2.0, 3.0, 4.0, 5.0];
pub const DEFAULT_LAGS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
/// Significance level of the reported KS critical values.
pub const KS_LEVEL: f64 = 0.01;

/// The horizon `T_z` as a function of the level.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum HorizonRule {
    /// `T_z = max(1, z)`
    #[default]
    MaxOneZ,
    /// `T_z = scale * z^exponent`
    Power { scale: f64, exponent: f64 },
}

impl HorizonRule {
    pub fn horizon(&self, z: f64) -> f64 {
        match *self {
            HorizonRule::MaxOneZ => z.max(1.0),
            HorizonRule::Power { scale, exponent } => scale * z.powf(exponent),
        }
    }

    /// `T_z z^(2/alpha)` must grow without bound.
    pub fn validate(&self, alpha: f64) -> Result<()> {
        if let HorizonRule::Power { scale, exponent } = *self {
            if !(scale > 0.0 && scale.is_finite()) {
                return config(format!("horizon scale must be positive, got {scale}"));
            }
            if exponent + 2.0 / alpha <= 0.0 {
                return config(format!(
                    "horizon T_z = {scale} z^{exponent} keeps T_z z^(2/alpha) bounded for alpha = {alpha}"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TailScenario {
    pub model: CorrelationModel,
    /// Lattice spacing in units of the limit process; 0 means a fine grid.
    pub delta: f64,
    pub z_levels: Vec<f64>,
    pub horizon: HorizonRule,
    pub n_per_level: u64,
}

impl TailScenario {
    pub fn new(model: CorrelationModel, delta: f64) -> Self {
        Self {
            model,
            delta,
            z_levels: DEFAULT_LEVELS.to_vec(),
            horizon: HorizonRule::default(),
            n_per_level: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return config(format!("delta must be nonnegative, got {}", self.delta));
        }
        if self.z_levels.is_empty() {
            return config("no levels given");
        }
        if let Some(z) = self.z_levels.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
            return config(format!("levels must be positive and finite, got {z}"));
        }
        if self.z_levels.windows(2).any(|w| w[1] <= w[0]) {
            return config("levels must be strictly increasing");
        }
        if self.n_per_level == 0 {
            return config("n_per_level must be positive");
        }
        self.horizon.validate(self.model.alpha())?;
        for &z in &self.z_levels {
            let t = self.horizon.horizon(z);
            if !(t > 0.0 && t.is_finite()) {
                return config(format!("horizon at level {z} is {t}; it must be positive"));
            }
        }
        Ok(())
    }

    fn lattice_delta(&self) -> f64 {
        if self.delta > 0.0 { self.delta } else { FINE_DELTA }
    }

    /// The time grid at level `z`: spacing `delta q(z) C^(-1/alpha)` on `[0, T_z]`.
    pub fn grid_at(&self, z: f64) -> Result<Grid> {
        let alpha = self.model.alpha();
        let step = self.lattice_delta() * z.powf(-2.0 / alpha) * self.model.local_constant().powf(-1.0 / alpha);
        let t = self.horizon.horizon(z);
        let n = (t / step + 1e-9).floor() as usize + 1;
        Grid::new(step, n, 0.0, WeightMode::Counting)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailLevel {
    pub z: f64,
    pub horizon: f64,
    pub grid_points: usize,
    pub lhs: EstimateReport,
    /// `C^(1/alpha) H T_z z^(2/alpha) P(X > z)`
    pub rhs: f64,
    /// `None` when the level was skipped because the exceedance probability is not small.
    pub ratio: Option<EstimateReport>,
}

/// Estimates `lhs / rhs` at every level. All levels share the master seed, so
/// comparisons across levels are paired. Levels whose `lhs` upper 95% bound
/// reaches 0.5 are skipped with a warning.
pub fn tail_ratio(
    scenario: &TailScenario,
    h_plugin: &EstimateReport,
    seed: u64,
    replicator: &Replicator,
) -> Result<Vec<TailLevel>> {
    scenario.validate()?;
    if !(h_plugin.point > 0.0) {
        return config(format!("Pickands constant plug-in must be positive, got {}", h_plugin.point));
    }
    let alpha = scenario.model.alpha();
    let c = scenario.model.local_constant();
    let opts = McOptions { n: scenario.n_per_level, seed, replicator: replicator.clone() };
    let mut levels = Vec::with_capacity(scenario.z_levels.len());
    for &z in &scenario.z_levels {
        let grid = scenario.grid_at(z)?;
        let t = scenario.horizon.horizon(z);
        let lhs = exceedance_stationary(&scenario.model, &grid, z, &WeightFunction::indicator(z), &opts)?;
        let rhs = c.powf(1.0 / alpha) * h_plugin.point * t * z.powf(2.0 / alpha) * normal::sf(z);
        let ratio = if lhs.ci95_high() >= 0.5 {
            log::warn!("level {z} skipped: exceedance probability {} is not small", lhs.point);
            None
        } else {
            let q = lhs.point / rhs;
            let rel = (lhs.std_error / lhs.point).hypot(h_plugin.std_error / h_plugin.point);
            Some(
                EstimateReport::new("tail_ratio", q, q * rel, lhs.n_replicates, seed)
                    .with_digest(lhs.config_digest.clone())
                    .with_partial(lhs.partial)
                    .param("z", z)
                    .param("T_z", t),
            )
        };
        levels.push(TailLevel { z, horizon: t, grid_points: grid.n_points(), lhs, rhs, ratio });
    }
    Ok(levels)
}

/// CDF of `N(mean, var) + Exp(1)`.
pub fn normal_plus_exp_cdf(y: f64, mean: f64, var: f64) -> f64 {
    if var <= 0.0 {
        let u = y - mean;
        return if u <= 0.0 { 0.0 } else { -(-u).exp_m1() };
    }
    let sd = var.sqrt();
    let u = y - mean;
    // exp(-u + var/2) Phi((u - var)/sd), in log space to avoid inf * 0.
    let log_term = -u + 0.5 * var + normal::ln_sf(-(u - var) / sd);
    (normal::cdf(u / sd) - log_term.exp()).clamp(0.0, 1.0)
}

/// `P(z (X(t) - z) <= y | X(0) > z)` for a standard bivariate normal pair with
/// correlation `rho`, by one-dimensional quadrature over `X(0)`.
pub fn prelimit_cdf(y: f64, z: f64, rho: f64) -> f64 {
    let level = z + y / z;
    if rho >= 1.0 {
        return if level <= z { 0.0 } else { 1.0 - (normal::ln_sf(level) - normal::ln_sf(z)).exp() };
    }
    let s = (1.0 - rho * rho).sqrt();
    let tail = normal::sf(z);
    let integrand = |x: f64| normal::pdf(x) * normal::cdf((level - rho * x) / s);
    (integrate_to_infinity(integrand, z, 1e-13 * tail) / tail).clamp(0.0, 1.0)
}

/// The exact lag-0 prelimit law: `1 - P(X > z + y/z) / P(X > z)`.
pub fn prelimit_cdf_at_origin(y: f64, z: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    -(normal::ln_sf(z + y / z) - normal::ln_sf(z)).exp_m1()
}

/// Largest gap between two CDFs on a fine grid of `y` values.
pub fn cdf_distance(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let steps = 4000;
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .map(|y| (f(y) - g(y)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct LagDiscrepancy {
    pub lag: f64,
    /// Two-sample KS distance between the conditional and limit samples.
    pub ks_two_sample: f64,
    pub ks_two_sample_critical: f64,
    /// One-sample KS distance of the limit sample to its closed-form marginal.
    pub ks_limit_vs_closed_form: f64,
    /// Distance between the exact prelimit marginal and the limit marginal.
    pub population_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalLimitReport {
    pub z: f64,
    pub q: f64,
    pub n: u64,
    pub seed: u64,
    pub lags: Vec<LagDiscrepancy>,
    /// One-sample KS distance of the lag-0 conditional sample to Exp(1).
    pub origin_ks_vs_exp: f64,
    /// One-sample KS distance of the lag-0 conditional sample to its exact law.
    pub origin_ks_vs_prelimit: f64,
    pub ks_one_sample_critical: f64,
    /// Largest absolute difference between the sample mean vectors.
    pub mean_discrepancy: f64,
    /// Largest absolute difference between the sample covariance matrices.
    pub covariance_discrepancy: f64,
}

fn mean_cov(rows: &[Vec<f64>], offset: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; k];
    for r in rows {
        for i in 0..k {
            mean[i] += r[offset + i] / n;
        }
    }
    let mut cov = vec![0.0; k * k];
    for r in rows {
        for i in 0..k {
            for j in 0..k {
                cov[i * k + j] += (r[offset + i] - mean[i]) * (r[offset + j] - mean[j]) / (n - 1.0);
            }
        }
    }
    (mean, cov)
}

/// Compares the rescaled conditional process at `lags` (in units of `q(z)`,
/// 0 is always included) with its limit `W(C^(1/alpha) t) + eta`. The two
/// samples come from independent streams.
pub fn conditional_limit_check(
    model: &CorrelationModel,
    z: f64,
    lags: &[f64],
    opts: &McOptions,
) -> Result<ConditionalLimitReport> {
    if !(z > 0.0 && z.is_finite()) {
        return config(format!("level must be positive, got {z}"));
    }
    opts.require_n(2, "conditional_limit_check")?;
    let mut lags: Vec<f64> = lags.to_vec();
    if lags.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return config("lags must be nonnegative");
    }
    lags.push(0.0);
    lags.sort_by(f64::total_cmp);
    lags.dedup();
    let k = lags.len();
    let alpha = model.alpha();
    let q = z.powf(-2.0 / alpha);
    let c_root = model.local_constant().powf(1.0 / alpha);

    let times: Vec<f64> = lags.iter().map(|l| l * q).collect();
    let mut cov = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            cov[i * k + j] = model.r(times[i] - times[j]);
        }
    }
    let process = GaussianSampler::dense(cov, k)?;
    let cond = ConditionalSampler::new(&process, 0, z)?;

    let s: Vec<f64> = lags[1..].iter().map(|l| c_root * l).collect();
    let m = s.len();
    let limit = if m > 0 {
        let mut fcov = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                fcov[i * m + j] = fbm_covariance(alpha, s[i], s[j]);
            }
        }
        Some(GaussianSampler::dense(fcov, m)?)
    } else {
        None
    };

    let seeds = Seeds::new(opts.seed);
    let out = opts.replicator.run::<Collect<Vec<f64>>, _, _, _>(
        0..opts.n,
        || (cond.scratch(), limit.as_ref().map(|l| l.scratch()), vec![0.0; k], vec![0.0; m]),
        |(cs, ls, x, b), r| {
            cond.sample_into(
                &mut seeds.rng(Stream::Gaussian, r),
                &mut seeds.rng(Stream::Truncation, r),
                cs,
                x,
            );
            if let (Some(l), Some(ls)) = (limit.as_ref(), ls.as_mut()) {
                l.sample_into(&mut seeds.rng(Stream::Reference, r), ls, b);
            }
            let eta = exp_mark(&mut seeds.rng(Stream::Exponential, r));
            let mut row = Vec::with_capacity(2 * k);
            row.extend(x.iter().map(|v| z * (v - z)));
            row.push(eta);
            for (i, si) in s.iter().enumerate() {
                row.push(std::f64::consts::SQRT_2 * b[i] - si.powf(alpha) + eta);
            }
            row
        },
    )?;
    let rows = out.acc.0;
    let n = rows.len();
    let column = |c: usize| -> Vec<f64> { rows.iter().map(|r| r[c]).collect() };

    let mut per_lag = Vec::with_capacity(k);
    for (i, &lag) in lags.iter().enumerate() {
        let mut pre = column(i);
        let mut lim = column(k + i);
        let sv = if i == 0 { 0.0 } else { s[i - 1] };
        let (mu, var) = (-sv.powf(alpha), 2.0 * sv.powf(alpha));
        let limit_cdf = |y: f64| normal_plus_exp_cdf(y, mu, var);
        let rho = model.r(times[i]);
        let spread = 6.0 * var.sqrt() + 1.0;
        let population = if i == 0 {
            cdf_distance(|y| prelimit_cdf_at_origin(y, z), limit_cdf, 0.0, 20.0)
        } else {
            cdf_distance(|y| prelimit_cdf(y, z, rho), limit_cdf, mu - spread, 20.0 + spread)
        };
        let ks_closed = ks_one_sample(&mut lim.clone(), limit_cdf);
        per_lag.push(LagDiscrepancy {
            lag,
            ks_two_sample: ks_two_sample(&mut pre, &mut lim),
            ks_two_sample_critical: ks_critical_two_sample(n, n, KS_LEVEL),
            ks_limit_vs_closed_form: ks_closed,
            population_distance: population,
        });
    }
    let origin_ks_vs_exp = ks_one_sample(&mut column(0), |y| if y <= 0.0 { 0.0 } else { -(-y).exp_m1() });
    let origin_ks_vs_prelimit = ks_one_sample(&mut column(0), |y| prelimit_cdf_at_origin(y, z));
    let (m1, c1) = mean_cov(&rows, 0, k);
    let (m2, c2) = mean_cov(&rows, k, k);
    let mean_discrepancy = m1.iter().zip(&m2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let covariance_discrepancy = c1.iter().zip(&c2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ConditionalLimitReport {
        z,
        q,
        n: n as u64,
        seed: opts.seed,
        lags: per_lag,
        origin_ks_vs_exp,
        origin_ks_vs_prelimit,
        ks_one_sample_critical: ks_critical_one_sample(n, KS_LEVEL),
        mean_discrepancy,
        covariance_discrepancy,
    })
}
