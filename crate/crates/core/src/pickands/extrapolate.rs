use crate::error::{config, Result};
use crate::stats::EstimateReport;

/// Scale on which estimates are fitted against `delta^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitScale {
    Linear,
    /// Fit `ln H`; the result is mapped back with `exp`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub exponent: f64,
    pub scale: FitScale,
}

impl Default for Extrapolation {
    fn default() -> Self {
        Self { exponent: 1.0, scale: FitScale::Linear }
    }
}

/// Coefficients `c` with `intercept = c . y` for the weighted least-squares
/// line through `(x, y)`.
fn intercept_weights(x: &[f64], w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let xbar = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xbar).powi(2)).sum();
    x.iter().zip(w).map(|(a, b)| b / total - xbar * b * (a - xbar) / sxx).collect()
}

fn slope_weights(x: &[f64], w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let xbar = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xbar).powi(2)).sum();
    x.iter().zip(w).map(|(a, b)| b * (a - xbar) / sxx).collect()
}

fn check_nested(deltas: &[f64]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let mut distinct = 1;
    for pair in order.windows(2) {
        let (a, b) = (deltas[pair[0]], deltas[pair[1]]);
        if !(b > 0.0) {
            return config("extrapolation needs positive grid spacings");
        }
        let k = (a / b).log2();
        if (k - k.round()).abs() > 1e-9 {
            return config(format!("grid spacings {a} and {b} are not dyadically nested"));
        }
        if k.round() >= 1.0 {
            distinct += 1;
        }
    }
    if distinct < 3 {
        return config(format!("extrapolation needs at least 3 distinct spacings, got {distinct}"));
    }
    Ok(order)
}

/// Intercept and its standard error for estimates with a known covariance
/// matrix (e.g. from shared paths), using an unweighted fit.
pub(crate) fn extrapolate_correlated(
    deltas: &[f64],
    means: &[f64],
    cov: &[Vec<f64>],
    ext: Extrapolation,
) -> Result<(f64, f64)> {
    check_nested(deltas)?;
    let x: Vec<f64> = deltas.iter().map(|d| d.powf(ext.exponent)).collect();
    let c = intercept_weights(&x, &vec![1.0; x.len()]);
    fit(means, cov, &c, ext.scale)
}

fn fit(means: &[f64], cov: &[Vec<f64>], c: &[f64], scale: FitScale) -> Result<(f64, f64)> {
    let k = means.len();
    match scale {
        FitScale::Linear => {
            let a: f64 = c.iter().zip(means).map(|(ci, y)| ci * y).sum();
            let mut v = 0.0;
            for i in 0..k {
                for j in 0..k {
                    v += c[i] * c[j] * cov[i][j];
                }
            }
            Ok((a, v.max(0.0).sqrt()))
        }
        FitScale::Log => {
            if means.iter().any(|&m| !(m > 0.0)) {
                return config("log-scale extrapolation needs positive estimates");
            }
            let a: f64 = c.iter().zip(means).map(|(ci, y)| ci * y.ln()).sum();
            let mut v = 0.0;
            for i in 0..k {
                for j in 0..k {
                    v += c[i] * c[j] * cov[i][j] / (means[i] * means[j]);
                }
            }
            let h = a.exp();
            Ok((h, h * v.max(0.0).sqrt()))
        }
    }
}

/// Extrapolates independent lattice estimates to `delta = 0` by a weighted
/// (inverse variance) straight-line fit in `delta`.
pub fn extrapolate_to_continuum(estimates: &[(f64, EstimateReport)]) -> Result<EstimateReport> {
    extrapolate_with(estimates, Extrapolation::default())
}

pub fn extrapolate_with(estimates: &[(f64, EstimateReport)], ext: Extrapolation) -> Result<EstimateReport> {
    if estimates.len() < 3 {
        return config(format!("extrapolation needs at least 3 estimates, got {}", estimates.len()));
    }
    let deltas: Vec<f64> = estimates.iter().map(|(d, _)| *d).collect();
    let order = check_nested(&deltas)?;
    let means: Vec<f64> = estimates.iter().map(|(_, r)| r.point).collect();
    let ses: Vec<f64> = estimates.iter().map(|(_, r)| r.std_error).collect();
    let x: Vec<f64> = deltas.iter().map(|d| d.powf(ext.exponent)).collect();
    let y_se: Vec<f64> = match ext.scale {
        FitScale::Linear => ses.clone(),
        FitScale::Log => ses.iter().zip(&means).map(|(s, m)| s / m).collect(),
    };
    let weights: Vec<f64> = if y_se.iter().all(|&s| s > 0.0 && s.is_finite()) {
        y_se.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; x.len()]
    };
    let c = intercept_weights(&x, &weights);
    let k = means.len();
    let cov: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { ses[i] * ses[i] } else { 0.0 }).collect())
        .collect();
    let (point, se) = fit(&means, &cov, &c, ext.scale)?;
    let ys: Vec<f64> = match ext.scale {
        FitScale::Linear => means.clone(),
        FitScale::Log => means.iter().map(|m| m.ln()).collect(),
    };
    let slope: f64 = slope_weights(&x, &weights).iter().zip(&ys).map(|(a, b)| a * b).sum();
    let sorted: Vec<f64> = order.iter().map(|&i| means[i]).collect();
    let up = sorted.windows(2).all(|p| p[1] >= p[0]);
    let down = sorted.windows(2).all(|p| p[1] <= p[0]);
    let n = estimates.iter().map(|(_, r)| r.n_replicates).sum();
    let seed = estimates[0].1.master_seed;
    Ok(EstimateReport::new("extrapolated", point, se, n, seed)
        .param("delta", 0.0)
        .param("exponent", ext.exponent)
        .diagnostic("slope", slope)
        .diagnostic("non_monotone", f64::from(u8::from(!(up || down))))
        .with_partial(estimates.iter().any(|(_, r)| r.partial)))
}
