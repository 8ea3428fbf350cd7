//! Weighted sojourn functionals `L = int f(X(t)) 1{X(t) > threshold} dt`.

use std::fmt;
use std::sync::Arc;

use crate::correlation::CorrelationModel;
use crate::error::{config, Error, Result};
use crate::grid::Grid;
use crate::replicate::McOptions;
use crate::seed::{Seeds, Stream};
use crate::sim::path::SamplePath;
use crate::sim::GaussianSampler;
use crate::stats::{EstimateReport, RunningStats};

#[derive(Clone)]
enum Shape {
    Unit,
    Exponential(f64),
    Power { center: f64, exponent: f64 },
    Custom { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

/// A weight `f` restricted to values above a threshold: `f(x) 1{x > threshold}`.
/// The unrestricted `f` must be positive above the threshold.
#[derive(Clone)]
pub struct WeightFunction {
    shape: Shape,
    threshold: f64,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl WeightFunction {
    /// `1{x > level}`: the plain time spent above `level`.
    pub fn indicator(level: f64) -> Self {
        Self { shape: Shape::Unit, threshold: level }
    }

    /// `exp(b x) 1{x > threshold}`
    pub fn exponential(b: f64, threshold: f64) -> Self {
        Self { shape: Shape::Exponential(b), threshold }
    }

    /// `|x - center|^exponent 1{x > threshold}`, which needs `center <= threshold`
    /// to stay positive above the threshold.
    pub fn power(center: f64, exponent: f64, threshold: f64) -> Result<Self> {
        if !(exponent >= 0.0 && exponent.is_finite()) {
            return config(format!("power weight exponent must be nonnegative, got {exponent}"));
        }
        if center > threshold {
            return Err(Error::Precondition(format!(
                "power weight centered at {center} vanishes above threshold {threshold}"
            )));
        }
        Ok(Self { shape: Shape::Power { center, exponent }, threshold })
    }

    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static, threshold: f64) -> Self {
        Self { shape: Shape::Custom { name: name.to_string(), f: Arc::new(f) }, threshold }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Same shape, new threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        match self.shape {
            Shape::Power { center, exponent } => Self::power(center, exponent, threshold),
            _ => Ok(Self { shape: self.shape.clone(), threshold }),
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self.shape, Shape::Unit)
    }

    /// The unrestricted weight.
    pub fn raw(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Unit => 1.0,
            Shape::Exponential(b) => (b * x).exp(),
            Shape::Power { center, exponent } => {
                if *exponent == 0.0 {
                    1.0
                } else {
                    (x - center).abs().powf(*exponent)
                }
            }
            Shape::Custom { f, .. } => f(x),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x > self.threshold {
            self.raw(x)
        } else {
            0.0
        }
    }

    /// Like [`eval`](Self::eval), failing on non-finite or non-positive weights above the threshold.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        if x <= self.threshold {
            return Ok(0.0);
        }
        let v = self.raw(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteWeight { value: x, result: v });
        }
        if v <= 0.0 {
            return Err(Error::Precondition(format!(
                "weight {} is not positive at {x} above its threshold",
                self.describe()
            )));
        }
        Ok(v)
    }

    pub fn describe(&self) -> String {
        let shape = match &self.shape {
            Shape::Unit => "indicator".to_string(),
            Shape::Exponential(b) => format!("exponential(b={b})"),
            Shape::Power { center, exponent } => format!("power(center={center},b={exponent})"),
            Shape::Custom { name, .. } => name.clone(),
        };
        format!("{shape}|threshold={}", self.threshold)
    }
}

/// Weighted sojourn of `values` on a grid whose points carry weight `cell`.
pub fn sojourn(values: &[f64], cell: f64, f: &WeightFunction) -> Result<f64> {
    let mut total = 0.0;
    for &x in values {
        total += f.eval_checked(x)?;
    }
    Ok(cell * total)
}

pub fn path_sojourn(path: &SamplePath, f: &WeightFunction) -> Result<f64> {
    sojourn(&path.values, path.grid.weight(), f)
}

pub fn supremum(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Frequency of paths with `sup X > z` but zero sojourn above the weight's
/// threshold. On a grid with `threshold <= z` the event is impossible.
pub fn zero_sojourn_event_rate(
    model: &CorrelationModel,
    grid: &Grid,
    z: f64,
    f: &WeightFunction,
    opts: &McOptions,
) -> Result<EstimateReport> {
    if f.threshold() > z {
        return Err(Error::Precondition(format!(
            "weight threshold {} exceeds level {z}",
            f.threshold()
        )));
    }
    opts.require_n(1, "zero-sojourn rate")?;
    let sampler = GaussianSampler::stationary(model, grid)?;
    let seeds = Seeds::new(opts.seed);
    let n = grid.n_points();
    let out = opts.replicator.run::<RunningStats, _, _, _>(
        0..opts.n,
        || (sampler.scratch(), vec![0.0; n]),
        |(scratch, x), r| {
            sampler.sample_into(&mut seeds.rng(Stream::Gaussian, r), scratch, x);
            let above = supremum(x) > z;
            let empty = x.iter().all(|&v| f.eval(v) == 0.0);
            f64::from(u8::from(above && empty))
        },
    )?;
    Ok(EstimateReport::from_stats("zero_sojourn_rate", &out.acc, opts.seed)
        .param("z", z)
        .with_partial(out.partial)
        .as_probability())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WeightMode;
    use proptest::prelude::*;

    #[test]
    fn indicator_counts_cells() {
        let v = [0.0, 1.5, 2.5, 3.0];
        assert_eq!(sojourn(&v, 0.5, &WeightFunction::indicator(1.0)).unwrap(), 1.5);
        assert_eq!(sojourn(&v, 1.0, &WeightFunction::indicator(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn exponential_weight_at_threshold_is_excluded() {
        let f = WeightFunction::exponential(1.0, 0.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert!((f.eval(1.0) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn overflowing_weight_is_reported() {
        let f = WeightFunction::exponential(1000.0, 0.0);
        let err = sojourn(&[1.0], 1.0, &f).unwrap_err();
        assert!(matches!(err, Error::NonFiniteWeight { value, .. } if value == 1.0));
        assert!(err.is_numerical());
    }

    #[test]
    fn power_center_above_threshold_is_rejected() {
        assert!(WeightFunction::power(3.0, 1.0, 2.5).is_err());
        assert!(WeightFunction::power(2.5, 1.0, 2.5).is_ok());
    }

    #[test]
    fn no_zero_sojourn_exceedances_on_grid() {
        let model = CorrelationModel::powered_exponential(1.0, 1.0).unwrap();
        let grid = Grid::unit_interval(16, WeightMode::Lebesgue).unwrap();
        for f in [WeightFunction::indicator(1.0), WeightFunction::exponential(0.5, 0.5)] {
            let r = zero_sojourn_event_rate(&model, &grid, 1.0, &f, &McOptions::new(2000, 4)).unwrap();
            assert_eq!(r.point, 0.0);
        }
    }

    proptest! {
        // The supremum exceeds the level exactly when the sojourn above it is positive.
        #[test]
        fn exceedance_iff_positive_sojourn(
            values in proptest::collection::vec(-5f64..5.0, 1..40),
            z in -5f64..5.0,
            cell in 0.01f64..2.0,
        ) {
            let l = sojourn(&values, cell, &WeightFunction::indicator(z)).unwrap();
            prop_assert_eq!(supremum(&values) > z, l > 0.0);
            let k = z - 0.5;
            let lk = sojourn(&values, cell, &WeightFunction::power(k, 1.5, k).unwrap()).unwrap();
            prop_assert!(supremum(&values) <= z || lk > 0.0);
        }

        // sup |X| > 0 implies a positive integral of |X|^b.
        #[test]
        fn absolute_power_sojourn_positive(values in proptest::collection::vec(-3f64..3.0, 1..30), b in 0f64..4.0) {
            let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
            let f = WeightFunction::power(0.0, b, 0.0).unwrap();
            let l = sojourn(&abs, 1.0, &f).unwrap();
            prop_assert_eq!(supremum(&abs) > 0.0, l > 0.0);
        }
    }
}
