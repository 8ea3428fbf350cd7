use sojourn::harmonic::{exceedance_continuous, exceedance_discrete, exceedance_stationary, naive_mc};
use sojourn::pickands::{
    pickands_dieker_yakir, pickands_harmonic, pickands_harmonic_sweep, pickands_probability, pickands_ratio,
    pickands_windowed, PickandsSpec,
};
use sojourn::sim::GaussianSampler;
use sojourn::{CorrelationModel, EstimateReport, Grid, McOptions, WeightFunction, WeightMode};

fn z(a: &EstimateReport, b: &EstimateReport) -> f64 {
    a.z_score(b)
}

fn exp_grid() -> (CorrelationModel, Grid, GaussianSampler) {
    let model = CorrelationModel::powered_exponential(1.0, 1.0).unwrap();
    let grid = Grid::unit_interval(16, WeightMode::Counting).unwrap();
    let sampler = GaussianSampler::stationary(&model, &grid).unwrap();
    (model, grid, sampler)
}

#[test]
fn weight_and_threshold_invariance() {
    let (_, _, sampler) = exp_grid();
    let level = 1.5;
    let mut est = Vec::new();
    for (i, kappa) in [level, level - 0.5].into_iter().enumerate() {
        let weights = [
            WeightFunction::indicator(kappa),
            WeightFunction::exponential(1.0, kappa),
            WeightFunction::power(kappa - 1.0, 1.0, kappa).unwrap(),
        ];
        for (j, f) in weights.iter().enumerate() {
            let opts = McOptions::new(40_000, 100 + (3 * i + j) as u64);
            est.push(exceedance_continuous(&sampler, level, f, &opts).unwrap());
        }
    }
    for a in &est {
        assert!(a.point.is_finite() && a.std_error.is_finite());
        for b in &est {
            assert!(z(a, b).abs() < 3.0, "{} vs {}", a.point, b.point);
        }
    }
}

#[test]
fn importance_sampling_beats_naive_at_rare_levels() {
    let (model, grid, sampler) = exp_grid();
    for level in [3.0, 3.5] {
        let opts = McOptions::new(20_000, 8);
        let h = exceedance_discrete(&sampler, level, &opts).unwrap();
        let s = exceedance_stationary(&model, &grid, level, &WeightFunction::indicator(level), &opts).unwrap();
        let naive = naive_mc(&sampler, level, &opts).unwrap();
        // Relative error of the naive estimator at the true probability.
        let p = h.point;
        let naive_rel = ((1.0 - p) / (p * opts.n as f64)).sqrt();
        assert!(h.std_error / h.point < naive_rel, "level {level}");
        assert!(s.std_error / s.point < naive_rel, "level {level}");
        if naive.point > 0.0 {
            assert!(h.std_error / h.point < naive.std_error / naive.point);
        }
    }
}

#[test]
fn lowered_threshold_keeps_empty_sojourns_finite() {
    // With kappa < z many conditional paths never pass z; they contribute 0, never NaN.
    let (_, _, sampler) = exp_grid();
    let f = WeightFunction::exponential(2.0, 0.0);
    let r = exceedance_continuous(&sampler, 2.5, &f, &McOptions::new(20_000, 4)).unwrap();
    assert!(r.point.is_finite() && r.point > 0.0 && r.std_error.is_finite());
}

#[test]
fn pickands_estimates_are_positive_and_bounded() {
    let opts = McOptions::new(20_000, 6);
    for alpha in [1.0, 2.0] {
        for delta in [1.0, 0.5] {
            let spec = PickandsSpec::new(alpha, delta);
            for r in [
                pickands_harmonic(&spec, &opts).unwrap(),
                pickands_probability(&spec, &opts).unwrap(),
                pickands_dieker_yakir(&spec, &opts).unwrap(),
                pickands_ratio(&spec, &opts).unwrap(),
            ] {
                assert!(r.point > 0.0, "{}", r.method);
                assert!(delta * r.point <= 1.0 + 3.0 * delta * r.std_error, "{}: {}", r.method, r.point);
            }
        }
    }
}

#[test]
fn halving_the_spacing_does_not_lower_the_constant() {
    let opts = McOptions::new(40_000, 12);
    for alpha in [1.0, 1.5] {
        let coarse = pickands_harmonic(&PickandsSpec::new(alpha, 1.0), &opts).unwrap();
        let fine = pickands_harmonic(&PickandsSpec::new(alpha, 0.5), &opts).unwrap();
        assert!(fine.point >= coarse.point - 2.0 * fine.std_error.hypot(coarse.std_error));
    }
}

#[test]
fn doubling_the_window_is_stable() {
    let opts = McOptions::new(40_000, 13);
    for alpha in [1.0, 1.5, 2.0] {
        let base = PickandsSpec::new(alpha, 0.5);
        let a = pickands_harmonic(&base.clone().window(12.0), &opts).unwrap();
        let b = pickands_harmonic(&base.window(24.0), &opts).unwrap();
        assert!(z(&a, &b).abs() < 2.0, "alpha {alpha}: {} vs {}", a.point, b.point);
    }
}

#[test]
fn drift_and_threshold_sweep_shares_paths() {
    let spec = PickandsSpec::new(2.0, 0.5);
    let opts = McOptions::new(20_000, 14);
    let sweep = pickands_harmonic_sweep(&spec, &[(0.0, 0.0), (1.0, 1.0)], &opts).unwrap();
    let single = pickands_harmonic(&spec, &opts).unwrap();
    assert_eq!(sweep[0].point, single.point);
    assert!(sweep[0].overlaps(&sweep[1]));
}

#[test]
fn lattice_constants_for_brownian_motion_agree() {
    let spec = PickandsSpec::new(1.0, 0.5).window(25.0);
    let opts = McOptions::new(40_000, 15);
    let h = pickands_harmonic(&spec, &opts).unwrap();
    let p = pickands_probability(&spec, &opts).unwrap();
    let d = pickands_dieker_yakir(&spec, &opts).unwrap();
    for (a, b) in [(&h, &p), (&h, &d), (&p, &d)] {
        assert!(z(a, b).abs() < 3.0, "{} {} vs {} {}", a.method, a.point, b.method, b.point);
    }
}

#[test]
fn one_point_window_is_exactly_one() {
    for theta in [0.0, 0.7] {
        let spec = PickandsSpec::new(1.0, 0.5).window(1.0).theta(theta);
        // T = delta: a single shift and a single time point.
        let spec = PickandsSpec { window: 0.5, ..spec };
        let r = pickands_windowed(&spec, &McOptions::new(20_000, 16)).unwrap();
        assert!((r.point - 1.0).abs() <= 3.0 * r.std_error.max(1e-12), "theta {theta}: {}", r.point);
    }
}

#[test]
fn windowed_constant_per_unit_approaches_harmonic() {
    // H(T) = H T + c + o(1) with c > 0, so H(T) / T overshoots by about c / T
    // and the slope (H(2T) - H(T)) / T removes the constant.
    for alpha in [1.0, 2.0] {
        let h = pickands_harmonic(&PickandsSpec::new(alpha, 0.5).window(20.0), &McOptions::new(40_000, 17)).unwrap();
        let w20 = pickands_windowed(&PickandsSpec::new(alpha, 0.5).window(20.0), &McOptions::new(40_000, 18)).unwrap();
        let w40 = pickands_windowed(&PickandsSpec::new(alpha, 0.5).window(40.0), &McOptions::new(40_000, 19)).unwrap();
        let (p20, p40) = (w20.diagnostics["per_unit"], w40.diagnostics["per_unit"]);
        assert!(p20 > h.point && p40 < p20, "alpha {alpha}: {p20}, {p40} vs {}", h.point);
        let slope = (w40.point - w20.point) / 20.0;
        let se = w40.std_error.hypot(w20.std_error) / 20.0;
        let zs = (slope - h.point) / se.hypot(h.std_error);
        assert!(zs.abs() < 3.0, "alpha {alpha}: slope {slope} +- {se} vs {}", h.point);
    }
}

#[test]
fn windowed_constant_grows_with_the_window() {
    let opts = McOptions::new(10_000, 18);
    let mut previous = 0.0;
    for t in [2.0, 4.0, 8.0] {
        let r = pickands_windowed(&PickandsSpec::new(1.5, 0.5).window(t), &opts).unwrap();
        assert!(r.point >= previous, "T = {t}");
        previous = r.point;
    }
}
