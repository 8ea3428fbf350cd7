//! Uniformly spaced index sets.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// How a grid point contributes to an integral over the index set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Riemann weight `delta`: the grid discretizes Lebesgue measure.
    Lebesgue,
    /// Weight 1: the grid is a countable index set with counting measure.
    Counting,
}

/// A finite set `{origin + i * delta : 0 <= i < n_points}`.
///
/// Grids whose origin is an integer multiple of `delta` are *lattice aligned*;
/// their points are computed as `k * delta` with integer `k`, so the point at
/// zero is exactly `0.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    delta: f64,
    n_points: usize,
    origin: f64,
    weight_mode: WeightMode,
    #[serde(skip)]
    lattice_start: Option<i64>,
}

const LATTICE_TOL: f64 = 1e-9;

impl Grid {
    pub fn new(delta: f64, n_points: usize, origin: f64, weight_mode: WeightMode) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return config(format!("grid spacing must be positive, got {delta}"));
        }
        if n_points == 0 {
            return config("grid must contain at least one point");
        }
        if !origin.is_finite() {
            return config(format!("grid origin must be finite, got {origin}"));
        }
        let k = origin / delta;
        let lattice_start = ((k - k.round()).abs() < LATTICE_TOL).then(|| k.round() as i64);
        Ok(Self { delta, n_points, origin, weight_mode, lattice_start })
    }

    /// Lattice `{-m, ..., m} * delta`, with `2m + 1` points and zero at index `m`.
    pub fn symmetric(delta: f64, half_points: usize, weight_mode: WeightMode) -> Result<Self> {
        Self::new(delta, 2 * half_points + 1, -(half_points as f64) * delta, weight_mode)
    }

    /// `n_points` equally spaced points covering `[0, 1]` (a single point sits at 0).
    pub fn unit_interval(n_points: usize, weight_mode: WeightMode) -> Result<Self> {
        let delta = if n_points > 1 { 1.0 / (n_points - 1) as f64 } else { 1.0 };
        Self::new(delta, n_points, 0.0, weight_mode)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.weight_mode
    }

    pub fn with_weight_mode(mut self, weight_mode: WeightMode) -> Self {
        self.weight_mode = weight_mode;
        self
    }

    /// Integration weight of a single point.
    pub fn weight(&self) -> f64 {
        match self.weight_mode {
            WeightMode::Lebesgue => self.delta,
            WeightMode::Counting => 1.0,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_points);
        match self.lattice_start {
            Some(k0) => (k0 + i as i64) as f64 * self.delta,
            None => self.origin + i as f64 * self.delta,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.point(i))
    }

    /// Last point of the grid.
    pub fn end(&self) -> f64 {
        self.point(self.n_points - 1)
    }

    /// Index of the point `t = 0`, when the grid is lattice aligned and covers it.
    pub fn zero_index(&self) -> Option<usize> {
        let k0 = self.lattice_start?;
        (k0 <= 0 && (-k0) < self.n_points as i64).then_some((-k0) as usize)
    }

    /// Lebesgue measure of the cell union `n_points * delta`, or the point
    /// count under counting measure.
    pub fn measure(&self) -> f64 {
        self.n_points as f64 * self.weight()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(0.0, 3, 0.0, WeightMode::Counting).is_err());
        assert!(Grid::new(-1.0, 3, 0.0, WeightMode::Counting).is_err());
        assert!(Grid::new(0.1, 0, 0.0, WeightMode::Counting).is_err());
        assert!(Grid::new(0.1, 3, f64::NAN, WeightMode::Counting).is_err());
    }

    #[test]
    fn weights_follow_mode() {
        let g = Grid::new(0.25, 4, 0.0, WeightMode::Lebesgue).unwrap();
        assert_eq!(g.weight(), 0.25);
        assert_eq!(g.with_weight_mode(WeightMode::Counting).weight(), 1.0);
    }

    #[test]
    fn symmetric_grid_has_exact_zero() {
        let g = Grid::symmetric(0.05, 240, WeightMode::Lebesgue).unwrap();
        assert_eq!(g.n_points(), 481);
        let z = g.zero_index().unwrap();
        assert_eq!(z, 240);
        assert_eq!(g.point(z), 0.0);
        assert!((g.point(0) + 12.0).abs() < 1e-12);
        assert!((g.end() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn points_match_origin_plus_offset() {
        let g = Grid::new(0.3, 7, 0.1, WeightMode::Counting).unwrap();
        assert_eq!(g.zero_index(), None);
        for (i, t) in g.points().enumerate() {
            assert_eq!(t, 0.1 + i as f64 * 0.3);
        }
        let h = Grid::new(0.1, 11, 0.0, WeightMode::Lebesgue).unwrap();
        for (i, t) in h.points().enumerate() {
            assert!((t - i as f64 * 0.1).abs() <= 4.0 * f64::EPSILON);
        }
        assert_eq!(h.zero_index(), Some(0));
    }

    #[test]
    fn unit_interval() {
        let g = Grid::unit_interval(101, WeightMode::Lebesgue).unwrap();
        assert!((g.delta() - 0.01).abs() < 1e-15);
        assert!((g.end() - 1.0).abs() < 1e-12);
        let single = Grid::unit_interval(1, WeightMode::Counting).unwrap();
        assert_eq!(single.n_points(), 1);
        assert_eq!(single.point(0), 0.0);
    }
}
