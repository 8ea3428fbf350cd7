//! Correlation functions of stationary unit-variance Gaussian processes.

use std::fmt;
use std::sync::Arc;

use crate::error::{config, Result};

type CorrelationFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `exp(-c |t|^alpha)`
    PoweredExponential,
    /// `1 / (1 + c |t|^alpha)`
    GeneralizedCauchy,
    Custom { name: String, r: CorrelationFn },
}

/// A correlation function with local behavior `1 - r(t) ~ c |t|^alpha` at zero.
#[derive(Clone)]
pub struct CorrelationModel {
    kind: Kind,
    alpha: f64,
    c: f64,
}

impl fmt::Debug for CorrelationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

fn check_shape(alpha: f64, c: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return config(format!("alpha must lie in (0, 2], got {alpha}"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return config(format!("local constant must be positive and finite, got {c}"));
    }
    Ok(())
}

impl CorrelationModel {
    pub fn powered_exponential(alpha: f64, c: f64) -> Result<Self> {
        check_shape(alpha, c)?;
        Ok(Self { kind: Kind::PoweredExponential, alpha, c })
    }

    pub fn generalized_cauchy(alpha: f64, c: f64) -> Result<Self> {
        check_shape(alpha, c)?;
        Ok(Self { kind: Kind::GeneralizedCauchy, alpha, c })
    }

    /// A user-supplied correlation function. Only `r(0) = 1` and the local
    /// parameters are checked here; positive definiteness is checked when a
    /// sampler is built on a concrete grid.
    pub fn custom(
        name: &str,
        alpha: f64,
        c: f64,
        r: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_shape(alpha, c)?;
        if (r(0.0) - 1.0).abs() > 1e-12 {
            return config(format!("correlation {name} must equal 1 at lag 0"));
        }
        Ok(Self { kind: Kind::Custom { name: name.to_string(), r: Arc::new(r) }, alpha, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn local_constant(&self) -> f64 {
        self.c
    }

    pub fn r(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            Kind::PoweredExponential => (-self.c * t.powf(self.alpha)).exp(),
            Kind::GeneralizedCauchy => 1.0 / (1.0 + self.c * t.powf(self.alpha)),
            Kind::Custom { r, .. } => r(t),
        }
    }

    /// `(1 - r(t)) / (c |t|^alpha)`, which tends to 1 as `t -> 0`.
    pub fn local_ratio(&self, t: f64) -> f64 {
        let tt = self.c * t.abs().powf(self.alpha);
        let one_minus = match &self.kind {
            Kind::PoweredExponential => -(-tt).exp_m1(),
            Kind::GeneralizedCauchy => tt / (1.0 + tt),
            Kind::Custom { r, .. } => 1.0 - r(t.abs()),
        };
        one_minus / tt
    }

    pub fn describe(&self) -> String {
        let name = match &self.kind {
            Kind::PoweredExponential => "powered_exponential",
            Kind::GeneralizedCauchy => "generalized_cauchy",
            Kind::Custom { name, .. } => name.as_str(),
        };
        format!("{name}(alpha={},c={})", self.alpha, self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_behavior_near_zero() {
        for model in [
            CorrelationModel::powered_exponential(1.5, 2.0).unwrap(),
            CorrelationModel::generalized_cauchy(0.7, 0.5).unwrap(),
        ] {
            assert_eq!(model.r(0.0), 1.0);
            assert!((model.local_ratio(1e-9) - 1.0).abs() < 1e-5);
            assert!(model.r(3.0) < 1.0 && model.r(-3.0) == model.r(3.0));
        }
    }

    #[test]
    fn shape_parameters_are_validated() {
        assert!(CorrelationModel::powered_exponential(0.0, 1.0).is_err());
        assert!(CorrelationModel::powered_exponential(2.5, 1.0).is_err());
        assert!(CorrelationModel::generalized_cauchy(1.0, -1.0).is_err());
        assert!(CorrelationModel::custom("bad", 1.0, 1.0, |_| 0.5).is_err());
    }
}
