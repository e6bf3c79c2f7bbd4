use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::spectral::GUARD_BAND;

/// Sum by recursive halving; the association order depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Maps `f` over `0..n` on the thread pool; results come back in index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Like [`par_map`], stopping at the first error (lowest index wins).
pub fn try_par_map<T, F>(n: usize, f: F) -> Result<Vec<T>, EstimatorError>
where
    T: Send,
    F: Fn(usize) -> Result<T, EstimatorError> + Sync + Send,
{
    par_map(n, f).into_iter().collect()
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self, EstimatorError> {
        let n = samples.len();
        if n < 2 {
            return Err(EstimatorError::TooFewSamples(n));
        }
        let mean = pairwise_sum(samples) / n as f64;
        let squares: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&squares) / (n - 1) as f64;
        Ok(Self { mean, std_error: (var / n as f64).sqrt(), n_samples: n, seed })
    }
}

/// Points `r e^{2 pi i j / angles}` for each radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGrid {
    pub radii: Vec<f64>,
    pub angles: usize,
}

impl Default for ZGrid {
    fn default() -> Self {
        Self { radii: vec![0.5, 0.9, 0.99, 0.999, 1.001, 1.01, 1.1, 1.5], angles: 64 }
    }
}

impl ZGrid {
    pub fn new(radii: Vec<f64>, angles: usize) -> Result<Self, EstimatorError> {
        let grid = Self { radii, angles };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.angles == 0 || self.radii.is_empty() {
            return Err(EstimatorError::InvalidParameter("z grid needs at least one radius and one angle".into()));
        }
        for &r in &self.radii {
            if !(r > 0.0 && r < 2.0) || (r - 1.0).abs() <= GUARD_BAND {
                return Err(EstimatorError::InvalidParameter(format!(
                    "z-grid radius {r} must lie in (0, 2) outside the guard band"
                )));
            }
        }
        Ok(())
    }

    /// Radius-major list of grid points.
    pub fn points(&self) -> Vec<Complex64> {
        self.radii
            .iter()
            .flat_map(|&r| (0..self.angles).map(move |j| Complex64::from_polar(r, TAU * j as f64 / self.angles as f64)))
            .collect()
    }

    /// The points strictly inside the unit disk.
    pub fn inner_points(&self) -> Vec<Complex64> {
        self.points().into_iter().filter(|z| z.norm() < 1.0).collect()
    }
}

/// Least-squares fit of `value = c e^{-g d}` on log values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub prefactor: f64,
    pub rate: f64,
    /// Standard error of `rate` from the regression residuals.
    pub rate_std_error: f64,
    pub r_squared: f64,
    pub min_distance: f64,
    pub max_distance: f64,
    pub n_points: usize,
}

/// Fits `(distance, value)` pairs; every value must be strictly positive.
pub fn fit_decay(points: &[(f64, f64)]) -> Result<DecayFit, EstimatorError> {
    let n = points.len();
    if n < 4 {
        return Err(EstimatorError::TooFewPoints(n));
    }
    if let Some(&(d, v)) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(EstimatorError::InvalidParameter(format!("non-positive value {v} at distance {d}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(EstimatorError::TooFewPoints(1));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res <= 1e-24 { 1.0 } else { 0.0 };
    Ok(DecayFit {
        prefactor: intercept.exp(),
        rate: -slope,
        rate_std_error: (ss_res / (nf - 2.0) / sxx).sqrt(),
        r_squared,
        min_distance: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max_distance: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        n_points: n,
    })
}

/// Fits Monte Carlo means, skipping those below five standard errors.
pub fn fit_decay_estimates(points: &[(f64, McEstimate)]) -> Result<DecayFit, EstimatorError> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, est)| est.mean > 0.0 && est.mean >= 5.0 * est.std_error)
        .map(|(d, est)| (*d, est.mean))
        .collect();
    fit_decay(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn estimate_statistics() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 7).unwrap();
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.n_samples, 4);
        assert!(McEstimate::from_samples(&[1.0], 0).is_err());
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let (c0, g0) = (3.7, 0.42);
        let pts: Vec<(f64, f64)> = (1..12).map(|d| (d as f64, c0 * (-g0 * d as f64).exp())).collect();
        let fit = fit_decay(&pts).unwrap();
        assert!((fit.prefactor - c0).abs() < 1e-10);
        assert!((fit.rate - g0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_values_have_zero_rate() {
        let pts: Vec<(f64, f64)> = (0..6).map(|d| (d as f64, 0.25)).collect();
        let fit = fit_decay(&pts).unwrap();
        assert!(fit.rate.abs() < 1e-14);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(matches!(fit_decay(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.2)]), Err(EstimatorError::TooFewPoints(3))));
        assert!(fit_decay(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.0), (3.0, 0.1)]).is_err());
        let noisy = |d: f64, mean: f64, se: f64| (d, McEstimate { mean, std_error: se, n_samples: 10, seed: 0 });
        let pts = [noisy(1.0, 1.0, 0.01), noisy(2.0, 0.5, 0.01), noisy(3.0, 0.25, 0.01), noisy(4.0, 0.125, 0.01), noisy(5.0, 0.04, 0.01)];
        let fit = fit_decay_estimates(&pts).unwrap();
        assert_eq!(fit.n_points, 4);
        assert!((fit.rate - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn default_grid_respects_guard_band() {
        let g = ZGrid::default();
        g.validate().unwrap();
        assert_eq!(g.points().len(), 8 * 64);
        assert_eq!(g.inner_points().len(), 4 * 64);
        assert!(ZGrid::new(vec![1.0 + 1e-7], 4).is_err());
        assert!(ZGrid::new(vec![2.5], 4).is_err());
    }

    proptest! {
        #[test]
        fn pairwise_sum_matches_naive(v in proptest::collection::vec(-1e3f64..1e3, 0..200)) {
            let naive: f64 = v.iter().sum();
            prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-9 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>()));
        }

        #[test]
        fn parallel_map_keeps_order(n in 0usize..300) {
            let out = par_map(n, |i| i * i);
            prop_assert_eq!(out, (0..n).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
