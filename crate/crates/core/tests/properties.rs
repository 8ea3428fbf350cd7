use proptest::prelude::*;
use sojourn::harmonic::exceedance_discrete;
use sojourn::sim::GaussianSampler;
use sojourn::{sojourn, CorrelationModel, Grid, McOptions, Reduction, Replicator, WeightFunction, WeightMode};

proptest! {
    #[test]
    fn indicator_sojourn_is_nonincreasing_in_level(
        values in proptest::collection::vec(-4.0f64..4.0, 1..60),
        a in -4.0f64..4.0,
        b in -4.0f64..4.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = sojourn(&values, 1.0, &WeightFunction::indicator(lo)).unwrap();
        let s_hi = sojourn(&values, 1.0, &WeightFunction::indicator(hi)).unwrap();
        prop_assert!(s_hi <= s_lo);
    }

    #[test]
    fn lebesgue_sojourn_is_delta_times_counting(
        values in proptest::collection::vec(-4.0f64..4.0, 1..60),
        level in -3.0f64..3.0,
        delta in 1e-3f64..2.0,
    ) {
        let f = WeightFunction::indicator(level);
        let lebesgue = Grid::new(delta, values.len(), 0.0, WeightMode::Lebesgue).unwrap();
        let counting = lebesgue.clone().with_weight_mode(WeightMode::Counting);
        let l = sojourn(&values, lebesgue.weight(), &f).unwrap();
        let c = sojourn(&values, counting.weight(), &f).unwrap();
        prop_assert_eq!(l, delta * c);
    }

    #[test]
    fn positive_supremum_of_modulus_gives_positive_power_sojourn(
        values in proptest::collection::vec(-4.0f64..4.0, 1..60),
        b in 0.0f64..4.0,
    ) {
        let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        let f = WeightFunction::power(0.0, b, 0.0).unwrap();
        let s = sojourn(&abs, 1.0, &f).unwrap();
        let sup = abs.iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(sup > 0.0, s > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sequential_estimates_ignore_worker_count(seed in any::<u64>(), workers in 1usize..5, level in 0.5f64..3.0) {
        let model = CorrelationModel::powered_exponential(1.0, 1.0).unwrap();
        let grid = Grid::unit_interval(8, WeightMode::Counting).unwrap();
        let sampler = GaussianSampler::stationary(&model, &grid).unwrap();
        let one = exceedance_discrete(&sampler, level, &McOptions::new(500, seed)).unwrap();
        let opts = McOptions::new(500, seed).with_replicator(Replicator::new(workers, Reduction::Sequential).unwrap());
        let many = exceedance_discrete(&sampler, level, &opts).unwrap();
        prop_assert_eq!(one, many);
    }
}
