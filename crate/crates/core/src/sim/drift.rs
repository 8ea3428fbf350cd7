//! The drifted process `W(t) = sqrt(2) B(t) - |t|^alpha` and its exponential mark.

use rand::Rng;
use rand_distr::Exp1;

use super::fbm::{FbmSampler, FbmScratch};
use crate::error::Result;
use crate::grid::Grid;

pub struct DriftedSampler {
    fbm: FbmSampler,
    drift: Vec<f64>,
}

impl DriftedSampler {
    pub fn new(alpha: f64, grid: &Grid) -> Result<Self> {
        let fbm = FbmSampler::new(alpha, grid)?;
        let drift = grid.points().map(|t| t.abs().powf(alpha)).collect();
        Ok(Self { fbm, drift })
    }

    pub fn from_fbm(fbm: FbmSampler) -> Self {
        let alpha = fbm.alpha();
        let drift = fbm.grid().points().map(|t| t.abs().powf(alpha)).collect();
        Self { fbm, drift }
    }

    pub fn grid(&self) -> &Grid {
        self.fbm.grid()
    }

    pub fn alpha(&self) -> f64 {
        self.fbm.alpha()
    }

    pub fn zero_index(&self) -> usize {
        self.fbm.zero_index()
    }

    pub fn len(&self) -> usize {
        self.drift.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drift.is_empty()
    }

    pub fn scratch(&self) -> FbmScratch {
        self.fbm.scratch()
    }

    /// Writes `W` (drift parameter 1) into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut FbmScratch, out: &mut [f64]) {
        self.fbm.sample_into(rng, scratch, out);
        for (o, d) in out.iter_mut().zip(&self.drift) {
            *o = std::f64::consts::SQRT_2 * *o - d;
        }
        out[self.zero_index()] = 0.0;
    }
}

/// A unit exponential variable, independent of the path.
pub fn exp_mark<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WeightMode;
    use crate::seed::{Seeds, Stream};

    #[test]
    fn mean_is_minus_drift() {
        let grid = Grid::symmetric(0.25, 8, WeightMode::Counting).unwrap();
        let s = DriftedSampler::new(1.0, &grid).unwrap();
        let mut scratch = s.scratch();
        let mut w = vec![0.0; grid.n_points()];
        let mut sums = vec![0.0; grid.n_points()];
        let reps = 20_000;
        for r in 0..reps {
            s.sample_into(&mut Seeds::new(1).rng(Stream::Gaussian, r), &mut scratch, &mut w);
            for (a, b) in sums.iter_mut().zip(&w) {
                *a += b;
            }
        }
        for (i, t) in grid.points().enumerate() {
            let mean = sums[i] / reps as f64;
            assert!((mean + t.abs()).abs() < 0.05, "t = {t}: mean {mean}");
        }
    }
}
