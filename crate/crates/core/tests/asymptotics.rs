use sojourn::asymptotics::{prelimit_cdf_at_origin, tail_ratio, HorizonRule, TailScenario};
use sojourn::pickands::{pickands_harmonic, pickands_probability, PickandsSpec};
use sojourn::{normal, CorrelationModel, McOptions, Replicator};

fn scenario(levels: Vec<f64>, n: u64) -> TailScenario {
    let model = CorrelationModel::powered_exponential(1.5, 1.0).unwrap();
    let mut s = TailScenario::new(model, 0.5);
    s.z_levels = levels;
    s.n_per_level = n;
    s
}

#[test]
fn guard_skips_levels_with_large_probability() {
    let mut s = scenario(vec![0.3, 0.6, 3.0], 4_000);
    s.horizon = HorizonRule::Power { scale: 20.0, exponent: 0.0 };
    let h = pickands_harmonic(&PickandsSpec::new(1.5, 0.5), &McOptions::new(4_000, 1)).unwrap();
    let levels = tail_ratio(&s, &h, 2, &Replicator::sequential()).unwrap();
    for l in &levels {
        assert_eq!(l.ratio.is_some(), l.lhs.ci95_high() < 0.5, "level {}", l.z);
    }
    assert!(levels[0].ratio.is_none());
    assert!(levels[2].ratio.is_some());
    assert!(tail_ratio(&scenario(vec![0.0, 1.0], 10), &h, 2, &Replicator::sequential()).is_err());
}

#[test]
fn plugin_choice_moves_ratios_within_their_intervals() {
    let s = scenario(vec![2.0, 3.0], 20_000);
    let spec = PickandsSpec::new(1.5, 0.5);
    let opts = McOptions::new(40_000, 3);
    let hh = pickands_harmonic(&spec, &opts).unwrap();
    let hp = pickands_probability(&spec, &opts).unwrap();
    let a = tail_ratio(&s, &hh, 4, &Replicator::sequential()).unwrap();
    let b = tail_ratio(&s, &hp, 4, &Replicator::sequential()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let (x, y) = (x.ratio.as_ref().unwrap(), y.ratio.as_ref().unwrap());
        let half = |r: &sojourn::EstimateReport| 0.5 * (r.ci95_high() - r.ci95_low());
        assert!((x.point - y.point).abs() < half(x) + half(y));
    }
}

#[test]
fn importance_sampling_error_grows_slower_than_naive() {
    let s = scenario(vec![2.0, 3.0, 4.0], 20_000);
    let h = pickands_harmonic(&PickandsSpec::new(1.5, 0.5), &McOptions::new(20_000, 5)).unwrap();
    let levels = tail_ratio(&s, &h, 6, &Replicator::sequential()).unwrap();
    let rel: Vec<f64> = levels.iter().map(|l| l.lhs.std_error / l.lhs.point).collect();
    let naive: Vec<f64> =
        levels.iter().map(|l| ((1.0 - l.lhs.point) / (l.lhs.point * s.n_per_level as f64)).sqrt()).collect();
    for i in 1..rel.len() {
        assert!(rel[i] / rel[i - 1] < naive[i] / naive[i - 1], "between levels {} and {}", i - 1, i);
    }
}

#[test]
fn prelimit_law_at_origin_is_a_scaled_tail() {
    let z = 4.0;
    for y in [0.1, 0.5, 1.0, 3.0] {
        let direct = 1.0 - normal::sf(z + y / z) / normal::sf(z);
        assert!((prelimit_cdf_at_origin(y, z) - direct).abs() < 1e-10);
    }
}
