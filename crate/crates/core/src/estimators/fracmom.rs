use num_complex::Complex64;
use serde::Serialize;

use super::{check_fraction, check_samples, column_estimates, invalid, try_par_map, EstimatorError, McEstimate};
use crate::graph::Digraph;
use crate::spectral::{check_guard, eigendecompose, DEFAULT_CLUSTER_EPS};
use crate::walk::{build_unitary, sample_disorder, DisorderSpec, ScatteringFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracMomPoint {
    pub z: Complex64,
    pub estimate: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FracMomReport {
    pub e: usize,
    pub f: usize,
    pub s: f64,
    pub points: Vec<FracMomPoint>,
    /// Largest mean over the evaluated points. The true supremum over the
    /// disk and its exterior can only be larger.
    pub grid_sup: f64,
}

/// Estimates `E |<e| (U - z)^{-1} f>|^s` at each `z`. One eigendecomposition
/// per realization serves every point.
#[allow(clippy::too_many_arguments)]
pub fn mc_fractional_moment(
    g: &Digraph,
    fam: &ScatteringFamily,
    mu: &DisorderSpec,
    e: usize,
    f: usize,
    s: f64,
    zs: &[Complex64],
    n_samples: usize,
    seed: u64,
) -> Result<FracMomReport, EstimatorError> {
    check_fraction("s", s)?;
    check_samples(n_samples)?;
    mu.validate()?;
    if zs.is_empty() {
        return Err(invalid("no z points given"));
    }
    for &z in zs {
        check_guard(z)?;
    }
    let n = g.edge_count();
    if e >= n || f >= n {
        return Err(invalid(format!("edge index out of range for {n} edges")));
    }
    let rows = try_par_map(n_samples, |i| {
        let dis = sample_disorder(g, mu, seed, i as u64)?;
        let u = build_unitary(g, fam, &dis)?;
        let eig = eigendecompose(u.matrix(), DEFAULT_CLUSTER_EPS)?;
        let weights = eig.edge_weights(e, f);
        Ok(zs
            .iter()
            .map(|&z| weights.iter().map(|&(lambda, w)| w / (lambda - z)).sum::<Complex64>().norm().powf(s))
            .collect::<Vec<f64>>())
    })?;
    let estimates = column_estimates(&rows, zs.len(), seed)?;
    let grid_sup = estimates.iter().map(|x| x.mean).fold(0.0, f64::max);
    let points = zs.iter().zip(estimates).map(|(&z, estimate)| FracMomPoint { z, estimate }).collect();
    Ok(FracMomReport { e, f, s, points, grid_sup })
}
