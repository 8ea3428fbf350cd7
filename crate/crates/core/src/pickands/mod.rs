//! Pickands constants `H_alpha^delta` of the drifted process
//! `W(t) = sqrt(2) B(t) - |t|^alpha`, on the lattice `delta Z` and in the
//! continuum limit `delta -> 0`.
//!
//! The infinite lattice is truncated to `[-T, T]`. Because `W(t)` drifts to
//! minus infinity like `-|t|^alpha`, the neglected tail is exponentially small
//! once the drift dominates the fluctuations; [`recommended_window`] gives a
//! window for which that holds at every `alpha`.

mod dieker_yakir;
mod extrapolate;
mod harmonic;
mod probability;
mod shift;
mod windowed;

use serde::{Deserialize, Serialize};

pub use dieker_yakir::pickands_dieker_yakir;
pub use extrapolate::{extrapolate_to_continuum, extrapolate_with, Extrapolation, FitScale};
pub use harmonic::{pickands_continuous, pickands_harmonic, pickands_harmonic_sweep, pickands_ratio};
pub use probability::pickands_probability;
pub use shift::{shift_identity_check, shift_identity_check_with, LatticeView, OriginCap, PathFunctional, ShiftIdentity};
pub use windowed::pickands_windowed;

use crate::error::{config, Result};
use crate::grid::{Grid, WeightMode};

pub const DEFAULT_WINDOW: f64 = 12.0;
pub const DEFAULT_INNER_DELTA: f64 = 0.05;
/// Grid refinements used for the continuum limit, as multiples of the inner spacing.
pub const CONTINUUM_LEVELS: [usize; 3] = [4, 2, 1];

/// How `delta = 0` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Continuum {
    /// Evaluate on spacings `inner_delta * {4, 2, 1}` with shared paths and
    /// extrapolate `ln H` linearly in `delta^(alpha / 2)` to zero.
    #[default]
    Extrapolated,
    /// Report the `inner_delta` lattice constant as is.
    FinestGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickandsSpec {
    pub alpha: f64,
    /// Lattice spacing; 0 requests the continuous constant.
    pub delta: f64,
    /// Drift multiplier `b` of the weight `exp(b W)`.
    pub drift: f64,
    pub theta: f64,
    /// Half-width `T` of the truncation window.
    pub window: f64,
    /// Spacing used when `delta = 0`.
    pub inner_delta: f64,
    pub continuum: Continuum,
}

impl PickandsSpec {
    pub fn new(alpha: f64, delta: f64) -> Self {
        Self {
            alpha,
            delta,
            drift: 0.0,
            theta: 0.0,
            window: DEFAULT_WINDOW,
            inner_delta: if delta > 0.0 { delta } else { DEFAULT_INNER_DELTA },
            continuum: Continuum::default(),
        }
    }

    pub fn drift(mut self, b: f64) -> Self {
        self.drift = b;
        self
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn window(mut self, window: f64) -> Self {
        self.window = window;
        self
    }

    pub fn inner_delta(mut self, inner: f64) -> Self {
        self.inner_delta = inner;
        self
    }

    pub fn continuum(mut self, mode: Continuum) -> Self {
        self.continuum = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return config(format!("alpha must lie in (0, 2], got {}", self.alpha));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return config(format!("delta must be nonnegative, got {}", self.delta));
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return config(format!("b must be nonnegative, got {}", self.drift));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return config(format!("theta must be nonnegative, got {}", self.theta));
        }
        if !(self.window >= 1.0 && self.window.is_finite()) {
            return config(format!("window T must be at least 1, got {}", self.window));
        }
        if !(self.inner_delta > 0.0 && self.inner_delta.is_finite()) {
            return config(format!("inner_delta must be positive, got {}", self.inner_delta));
        }
        if self.delta > 0.0 && self.inner_delta != self.delta {
            return config("inner_delta must equal delta when delta > 0");
        }
        Ok(())
    }

    /// The lattice spacing actually simulated at the finest level.
    pub fn effective_delta(&self) -> f64 {
        if self.delta > 0.0 { self.delta } else { self.inner_delta }
    }
}

/// A truncation window large enough that the drift `|t|^alpha` exceeds
/// 3.5 standard deviations of `sqrt(2) B(t)` at its edge, and at least 12.
pub fn recommended_window(alpha: f64) -> f64 {
    let edge = (3.5 * std::f64::consts::SQRT_2).powf(2.0 / alpha);
    edge.max(DEFAULT_WINDOW).ceil()
}

/// Number of lattice steps of size `delta` in `[0, window]`.
pub(crate) fn steps(window: f64, delta: f64) -> usize {
    (window / delta + 1e-9).floor() as usize
}

/// `[-T, T] ∩ delta Z`.
pub(crate) fn symmetric_lattice(window: f64, delta: f64) -> Result<Grid> {
    let m = steps(window, delta);
    Grid::symmetric(delta, m, WeightMode::Lebesgue)
}

/// Checks that `window / (k * inner)` is an integer, as nested subsampling needs.
pub(crate) fn require_nested(window: f64, inner: f64, coarsest: usize) -> Result<usize> {
    let ratio = window / (inner * coarsest as f64);
    if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
        return config(format!(
            "window {window} must be a multiple of {coarsest} x inner_delta = {}",
            coarsest as f64 * inner
        ));
    }
    Ok(ratio.round() as usize * coarsest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(PickandsSpec::new(1.0, 0.5).validate().is_ok());
        assert!(PickandsSpec::new(2.5, 0.5).validate().is_err());
        assert!(PickandsSpec::new(1.0, 0.5).window(0.5).validate().is_err());
        assert!(PickandsSpec::new(1.0, 0.5).theta(-1.0).validate().is_err());
        assert!(PickandsSpec::new(1.0, 0.5).inner_delta(0.1).validate().is_err());
        assert_eq!(PickandsSpec::new(1.0, 0.0).effective_delta(), DEFAULT_INNER_DELTA);
    }

    #[test]
    fn windows() {
        assert_eq!(recommended_window(2.0), 12.0);
        assert_eq!(recommended_window(1.0), 25.0);
        assert_eq!(recommended_window(0.5), 601.0);
        assert_eq!(steps(12.0, 0.1), 120);
        assert_eq!(require_nested(12.0, 0.05, 4).unwrap(), 240);
        assert!(require_nested(12.1, 0.05, 4).is_err());
    }
}
