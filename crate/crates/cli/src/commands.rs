//! Dispatch from a parsed configuration to the estimators.

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use serde_json::{json, Value as Json};
use sojourn::asymptotics::{conditional_limit_check, tail_ratio, HorizonRule, TailScenario};
use sojourn::harmonic::{
    continuity_probe, exceedance_continuous, exceedance_discrete, exceedance_stationary, naive_mc, GaussianProbe,
    LifshitsProcess,
};
use sojourn::pickands::{
    pickands_continuous, pickands_dieker_yakir, pickands_harmonic_sweep, pickands_probability, pickands_ratio,
    pickands_windowed, recommended_window, shift_identity_check, Continuum, PickandsSpec,
};
use sojourn::sim::{conditional_path_exceeding, drifted_path, fbm_path, stationary_path, GaussianSampler};
use sojourn::{CorrelationModel, EstimateReport, Grid, McOptions, Reduction, Replicator, Seeds, WeightFunction, WeightMode};

use crate::config::{Command, RunConfig};
use crate::output::{num, Check, Output};
use crate::CliError;

pub struct Context {
    pub config: RunConfig,
    pub replicator: Replicator,
}

impl Context {
    pub fn new(config: RunConfig, cancel: Arc<AtomicBool>) -> Result<Self, CliError> {
        let reduction = if config.parallel_reduction { Reduction::Parallel } else { Reduction::Sequential };
        let replicator = Replicator::new(config.workers, reduction)?.with_cancel(cancel);
        Ok(Self { config, replicator })
    }

    fn opts(&self, n: u64, seed: u64) -> McOptions {
        McOptions::new(n, seed).with_replicator(self.replicator.clone())
    }

    /// Seed of a named sub-run, so that sub-runs use independent streams.
    fn sub_seed(&self, label: &str) -> u64 {
        Seeds::new(self.config.seed).derive(label).master()
    }

    fn model(&self) -> Result<CorrelationModel, CliError> {
        let c = &self.config;
        let alpha = c.real("alpha").unwrap_or(1.0);
        let local = c.real("c").unwrap_or(1.0);
        Ok(match c.text("model") {
            "generalized_cauchy" => CorrelationModel::generalized_cauchy(alpha, local)?,
            _ => CorrelationModel::powered_exponential(alpha, local)?,
        })
    }
}

pub fn run(ctx: &Context) -> Result<Output, CliError> {
    let mut out = match ctx.config.command {
        Command::Simulate => simulate(ctx)?,
        Command::EstimateSup => estimate_sup(ctx)?,
        Command::EstimatePickands => estimate_pickands(ctx)?,
        Command::VerifyTail => verify_tail(ctx)?,
        Command::VerifyIdentities => verify_identities(ctx)?,
        Command::Report => unreachable!("report is handled separately"),
    };
    out.partial |= out.results.iter().any(|r| r.partial);
    Ok(out)
}

fn count(c: &RunConfig, key: &str) -> u64 {
    c.count(key).expect("key has a default")
}

fn real(c: &RunConfig, key: &str) -> f64 {
    c.real(key).expect("key has a default")
}

fn simulate(ctx: &Context) -> Result<Output, CliError> {
    let c = &ctx.config;
    let grid = Grid::new(real(c, "delta"), count(c, "points") as usize, real(c, "origin"), WeightMode::Lebesgue)?;
    let alpha = real(c, "alpha");
    let (values, eta, sup) = match c.text("process") {
        "fbm" => {
            let p = fbm_path(alpha, &grid, c.seed)?;
            let s = p.supremum();
            (p.values, None, s)
        }
        "stationary" => {
            let p = stationary_path(&ctx.model()?, &grid, c.seed)?;
            let s = p.supremum();
            (p.values, None, s)
        }
        "conditional" => {
            let pivot = count(c, "pivot") as usize;
            if pivot >= grid.n_points() {
                return Err(CliError::Usage(format!("pivot {pivot} is outside the {}-point grid", grid.n_points())));
            }
            let z = c.real("z").expect("checked at parse time");
            let p = conditional_path_exceeding(&ctx.model()?, &grid, pivot, z, c.seed)?;
            let s = p.supremum();
            (p.values, None, s)
        }
        _ => {
            let p = drifted_path(alpha, real(c, "b"), &grid, c.seed)?;
            let s = p.supremum();
            (p.values, Some(p.eta), s)
        }
    };
    let t: Vec<f64> = grid.points().collect();
    let mut out = Output { csv_header: vec!["t", "value"], ..Default::default() };
    out.csv_rows = t.iter().zip(&values).map(|(t, v)| vec![num(*t), num(*v)]).collect();
    let mut path = json!({ "t": t, "value": values, "supremum": sup });
    if let Some(eta) = eta {
        path["eta"] = json!(eta);
    }
    out.details.insert("path".into(), path);
    Ok(out)
}

fn weight(c: &RunConfig, kappa: f64) -> Result<WeightFunction, CliError> {
    let b = real(c, "weight_b");
    Ok(match c.text("weight") {
        "exponential" => WeightFunction::exponential(b, kappa),
        "power" => WeightFunction::power(kappa - 1.0, b, kappa)?,
        _ => WeightFunction::indicator(kappa),
    })
}

fn estimate_sup(ctx: &Context) -> Result<Output, CliError> {
    let c = &ctx.config;
    let points = count(c, "points") as usize;
    let grid = match c.real("delta") {
        Some(d) => Grid::new(d, points, 0.0, WeightMode::Counting)?,
        None => Grid::unit_interval(points, WeightMode::Counting)?,
    };
    let z = real(c, "z");
    let kappa = c.real("kappa").unwrap_or(z);
    let model = ctx.model()?;
    let sampler = GaussianSampler::stationary(&model, &grid)?;
    let f = weight(c, kappa)?;
    let opts = ctx.opts(count(c, "n"), c.seed);
    let methods: &[&str] = match c.text("method") {
        "all" => &["discrete", "continuous", "stationary", "naive"],
        "discrete" => &["discrete"],
        "continuous" => &["continuous"],
        "stationary" => &["stationary"],
        _ => &["naive"],
    };
    let mut out = Output {
        csv_header: vec!["method", "z", "kappa", "n", "point", "std_error", "ci95_low", "ci95_high"],
        ..Default::default()
    };
    for &m in methods {
        let r = match m {
            "discrete" => exceedance_discrete(&sampler, z, &opts)?,
            "continuous" => exceedance_continuous(&sampler, z, &f, &opts)?,
            "stationary" => exceedance_stationary(&model, &grid, z, &f, &opts)?,
            _ => naive_mc(&sampler, z, &opts)?,
        };
        let r = r.param("z", z).param("grid_points", points as f64).param("delta", grid.delta());
        let k = r.params.get("kappa").copied().unwrap_or(z);
        out.csv_rows.push(vec![
            r.method.clone(),
            num(z),
            num(k),
            r.n_replicates.to_string(),
            num(r.point),
            num(r.std_error),
            num(r.ci95_low()),
            num(r.ci95_high()),
        ]);
        out.results.push(r);
    }
    Ok(out)
}

const CLASSICAL_ONLY: &[&str] = &["probability", "dieker-yakir", "ratio"];

fn pickands_methods(requested: &str, delta: f64, classical: bool) -> Vec<&'static str> {
    let lattice = delta > 0.0;
    let all: Vec<&'static str> = if lattice {
        vec!["harmonic", "probability", "dieker-yakir", "ratio", "windowed"]
    } else {
        vec!["continuous", "dieker-yakir"]
    };
    match requested {
        "auto" => vec![if lattice { "harmonic" } else { "continuous" }],
        "all" => all.into_iter().filter(|m| classical || !CLASSICAL_ONLY.contains(m)).collect(),
        "harmonic" => vec!["harmonic"],
        "probability" => vec!["probability"],
        "dieker-yakir" => vec!["dieker-yakir"],
        "continuous" => vec!["continuous"],
        "windowed" => vec!["windowed"],
        _ => vec!["ratio"],
    }
}

fn estimate_pickands(ctx: &Context) -> Result<Output, CliError> {
    let c = &ctx.config;
    let n = count(c, "n");
    let continuum = if c.text("continuum") == "finest" { Continuum::FinestGrid } else { Continuum::Extrapolated };
    let pairs: Vec<(f64, f64)> =
        c.reals("b").iter().flat_map(|&b| c.reals("theta").iter().map(move |&t| (b, t))).collect();
    let mut out = Output {
        csv_header: vec!["alpha", "delta", "b", "theta", "T", "n", "method", "point", "std_error", "ci95_low", "ci95_high"],
        ..Default::default()
    };
    for &alpha in c.reals("alpha") {
        let window = if c.text("window_rule") == "recommended" { recommended_window(alpha) } else { real(c, "T") };
        for &delta in c.reals("delta") {
            let mut base = PickandsSpec::new(alpha, delta).window(window).continuum(continuum);
            if delta == 0.0 {
                base = base.inner_delta(real(c, "inner_delta"));
            }
            let requested = c.text("method");
            let all_classical = pairs.iter().all(|&(b, t)| b == 0.0 && t == 0.0);
            let methods = pickands_methods(requested, delta, all_classical);
            if requested != "all" && methods.iter().any(|m| CLASSICAL_ONLY.contains(m)) && !all_classical {
                return Err(CliError::Usage(format!(
                    "method {requested} computes the constant with b = 0 and theta = 0 only"
                )));
            }
            let opts = ctx.opts(n, c.seed);
            for m in methods {
                let reports = if m == "harmonic" {
                    // One sweep shares the paths across every (b, theta) pair.
                    pickands_harmonic_sweep(&base, &pairs, &opts)?
                } else if CLASSICAL_ONLY.contains(&m) {
                    vec![match m {
                        "probability" => pickands_probability(&base, &opts)?,
                        "dieker-yakir" => pickands_dieker_yakir(&base, &opts)?,
                        _ => pickands_ratio(&base, &opts)?,
                    }
                    .param("b", 0.0)
                    .param("theta", 0.0)]
                } else {
                    let mut v = Vec::with_capacity(pairs.len());
                    for &(b, theta) in &pairs {
                        let spec = base.clone().drift(b).theta(theta);
                        let r = if m == "continuous" {
                            pickands_continuous(&spec, &opts)?
                        } else {
                            per_unit(pickands_windowed(&spec, &opts)?)
                        };
                        v.push(r.param("b", b).param("theta", theta));
                    }
                    v
                };
                for r in reports {
                    let r = r.param("alpha", alpha).param("delta", delta).param("T", window);
                    out.csv_rows.push(vec![
                        num(alpha),
                        num(delta),
                        num(r.params["b"]),
                        num(r.params["theta"]),
                        num(window),
                        r.n_replicates.to_string(),
                        r.method.clone(),
                        num(r.point),
                        num(r.std_error),
                        num(r.ci95_low()),
                        num(r.ci95_high()),
                    ]);
                    out.results.push(r);
                }
            }
        }
    }
    Ok(out)
}

/// Rescales a finite-window constant `H(T)` to `H(T) / T`, the quantity
/// comparable with the other representations (it overshoots by O(1/T)).
fn per_unit(r: EstimateReport) -> EstimateReport {
    let (p, se) = (r.diagnostics["per_unit"], r.diagnostics["per_unit_se"]);
    let total = r.point;
    let mut out = EstimateReport::new("pickands_windowed_per_unit", p, se, r.n_replicates, r.master_seed)
        .with_partial(r.partial)
        .diagnostic("h_window_total", total);
    out.params = r.params;
    out.diagnostics.extend(r.diagnostics);
    out
}

fn verify_tail(ctx: &Context) -> Result<Output, CliError> {
    let c = &ctx.config;
    let model = ctx.model()?;
    let alpha = model.alpha();
    let delta = real(c, "delta");
    let check = c.text("check");
    let mut out = Output {
        csv_header: vec![
            "check", "z", "T_z", "lhs", "lhs_se", "rhs", "ratio", "ratio_ci_low", "ratio_ci_high", "ks_distance",
            "ks_critical",
        ],
        ..Default::default()
    };
    let blank = String::new;
    if check != "limit" {
        let horizon = match c.text("horizon") {
            "power" => HorizonRule::Power { scale: real(c, "horizon_scale"), exponent: real(c, "horizon_exponent") },
            _ => HorizonRule::MaxOneZ,
        };
        let scenario = TailScenario {
            model: model.clone(),
            delta,
            z_levels: c.reals("levels").to_vec(),
            horizon,
            n_per_level: count(c, "n"),
        };
        scenario.validate()?;
        let spec = PickandsSpec::new(alpha, delta).window(recommended_window(alpha));
        let plugin_opts = ctx.opts(count(c, "plugin_n"), ctx.sub_seed("plugin"));
        let h = match (c.text("plugin"), delta > 0.0) {
            ("probability", _) => pickands_probability(&spec, &plugin_opts)?,
            (_, true) => pickands_harmonic_sweep(&spec, &[(0.0, 0.0)], &plugin_opts)?.remove(0),
            (_, false) => pickands_continuous(&spec, &plugin_opts)?,
        };
        let h = h.param("alpha", alpha).param("delta", delta);
        let levels = tail_ratio(&scenario, &h, c.seed, &ctx.replicator)?;
        out.results.push(h);
        let mut rows = Vec::new();
        for l in &levels {
            let (q, lo, hi) = match &l.ratio {
                Some(r) => (num(r.point), num(r.ci95_low()), num(r.ci95_high())),
                None => (blank(), blank(), blank()),
            };
            out.csv_rows.push(vec![
                "ratio".into(),
                num(l.z),
                num(l.horizon),
                num(l.lhs.point),
                num(l.lhs.std_error),
                num(l.rhs),
                q,
                lo,
                hi,
                blank(),
                blank(),
            ]);
            out.results.push(l.lhs.clone().param("T_z", l.horizon));
            if let Some(r) = &l.ratio {
                out.results.push(r.clone());
            }
            rows.push(serde_json::to_value(l).expect("tail levels serialize"));
        }
        out.details.insert("tail_levels".into(), Json::Array(rows));
        out.details.insert("trend".into(), trend(&levels));
    }
    if check != "ratio" {
        let opts = ctx.opts(count(c, "limit_n"), ctx.sub_seed("limit"));
        let mut rows = Vec::new();
        for &z in c.reals("levels") {
            let r = conditional_limit_check(&model, z, c.reals("lags"), &opts)?;
            out.csv_rows.push(vec![
                "limit".into(),
                num(z),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                num(r.origin_ks_vs_exp),
                num(r.ks_one_sample_critical),
            ]);
            rows.push(serde_json::to_value(&r).expect("limit reports serialize"));
        }
        out.details.insert("conditional_limit".into(), Json::Array(rows));
    }
    Ok(out)
}

/// Whether the ratio moves toward 1 from the first to the last evaluated level.
fn trend(levels: &[sojourn::asymptotics::TailLevel]) -> Json {
    let evaluated: Vec<(f64, f64)> =
        levels.iter().filter_map(|l| l.ratio.as_ref().map(|r| (l.z, r.point))).collect();
    match (evaluated.first(), evaluated.last()) {
        (Some(&(z0, q0)), Some(&(z1, q1))) if evaluated.len() > 1 => json!({
            "first_level": z0,
            "first_ratio": q0,
            "last_level": z1,
            "last_ratio": q1,
            "closer_to_one": (q1 - 1.0).abs() < (q0 - 1.0).abs(),
        }),
        _ => Json::Null,
    }
}

fn verify_identities(ctx: &Context) -> Result<Output, CliError> {
    let c = &ctx.config;
    let n = count(c, "n");
    let z = real(c, "z");
    let model = ctx.model()?;
    let grid = Grid::unit_interval(count(c, "points") as usize, WeightMode::Counting)?;
    let sampler = GaussianSampler::stationary(&model, &grid)?;

    let mut estimates: Vec<EstimateReport> = Vec::new();
    let mut labelled = |label: String, r: EstimateReport| estimates.push(EstimateReport { method: label, ..r });
    labelled("discrete".into(), exceedance_discrete(&sampler, z, &ctx.opts(n, ctx.sub_seed("discrete")))?);
    for kappa in [z, z - 0.5] {
        let weights = [
            ("indicator", WeightFunction::indicator(kappa)),
            ("exponential", WeightFunction::exponential(1.0, kappa)),
            ("power", WeightFunction::power(kappa - 1.0, 1.0, kappa)?),
        ];
        for (name, f) in weights {
            let label = format!("continuous[{name},kappa={kappa}]");
            let r = exceedance_continuous(&sampler, z, &f, &ctx.opts(n, ctx.sub_seed(&label)))?;
            labelled(label, r);
        }
    }
    let f = WeightFunction::indicator(z);
    labelled("stationary".into(), exceedance_stationary(&model, &grid, z, &f, &ctx.opts(n, ctx.sub_seed("stationary")))?);
    labelled("naive".into(), naive_mc(&sampler, z, &ctx.opts(n, ctx.sub_seed("naive")))?);

    let mut out = Output {
        csv_header: vec!["check", "lhs", "lhs_se", "rhs", "rhs_se", "discrepancy", "combined_se", "z_score", "pass"],
        ..Default::default()
    };
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            out.checks.push(Check::between(format!("{} vs {}", a.method, b.method), a, b));
        }
    }

    let shift_alpha = real(c, "shift_alpha");
    for (&h, &x) in c.reals("shift_h").iter().zip(c.reals("shift_x")) {
        let label = format!("shift[h={h},x={x}]");
        let s = shift_identity_check(shift_alpha, h, x, &ctx.opts(n, ctx.sub_seed(&label)))?;
        out.checks.push(Check::between(label.clone(), &s.lhs, &s.rhs));
        estimates.push(EstimateReport { method: format!("{label}.lhs"), ..s.lhs });
        estimates.push(EstimateReport { method: format!("{label}.rhs"), ..s.rhs });
    }

    let gaussian = continuity_probe(&GaussianProbe::new(sampler, &grid), z, &ctx.opts(n, ctx.sub_seed("probe")))?;
    let gap = &gaussian.atom_gap;
    out.checks.push(Check::from_parts("gaussian atom gap vs 0", gap.point, gap.std_error, 0.0, 0.0));
    let lifshits =
        continuity_probe(&LifshitsProcess::on_unit_interval(), 1.0, &ctx.opts(n, ctx.sub_seed("lifshits")))?;
    let reach = &lifshits.reach_without_sojourn;
    out.checks.push(Check::from_parts("lifshits reach without sojourn vs 1/2", reach.point, reach.std_error, 0.5, 0.0));
    let gap = &lifshits.atom_gap;
    out.checks.push(Check::from_parts("lifshits atom gap vs 1/2", gap.point, gap.std_error, 0.5, 0.0));
    estimates.push(EstimateReport { method: "gaussian_atom_gap".into(), ..gaussian.atom_gap });
    estimates.push(EstimateReport { method: "lifshits_reach_without_sojourn".into(), ..lifshits.reach_without_sojourn });
    estimates.push(EstimateReport { method: "lifshits_atom_gap".into(), ..lifshits.atom_gap });

    out.csv_rows = out
        .checks
        .iter()
        .map(|k| {
            vec![
                k.check.clone(),
                num(k.lhs),
                num(k.lhs_se),
                num(k.rhs),
                num(k.rhs_se),
                num(k.discrepancy),
                num(k.combined_se),
                num(k.z_score),
                k.pass.to_string(),
            ]
        })
        .collect();
    out.results = estimates;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_resolution() {
        assert_eq!(pickands_methods("auto", 0.5, true), ["harmonic"]);
        assert_eq!(pickands_methods("auto", 0.0, true), ["continuous"]);
        assert_eq!(pickands_methods("all", 0.0, true), ["continuous", "dieker-yakir"]);
        assert_eq!(pickands_methods("all", 0.5, false), ["harmonic", "windowed"]);
    }
}
