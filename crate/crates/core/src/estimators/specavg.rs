use num_complex::Complex64;
use serde::Serialize;

use super::{check_samples, column_estimates, invalid, try_par_map, EstimatorError, McEstimate};
use crate::graph::Digraph;
use crate::spectral::{check_guard, resolvent_matrix, SpectralError};
use crate::walk::{build_unitary, sample_disorder, Disorder, DisorderSpec, ScatteringFamily};
use crate::CMatrix;

/// Fewest quadrature nodes accepted for the phase integral.
pub const MIN_QUADRATURE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecAvgPoint {
    pub z: Complex64,
    pub estimate: McEstimate,
}

fn check_inner(zs: &[Complex64]) -> Result<(), EstimatorError> {
    if zs.is_empty() {
        return Err(invalid("no z points given"));
    }
    for &z in zs {
        check_guard(z)?;
        if z.norm() >= 1.0 {
            return Err(invalid(format!("z = {z} must lie inside the unit disk")));
        }
    }
    Ok(())
}

/// `sum_j w_j <e| Re((U + z)(U - z)^{-1}) e>` with the phase of the source
/// vertex of `e` set to each quadrature node `theta_j` and all other phases
/// taken from `dis`. One value per `z`; every `z` must lie in the open disk.
///
/// Changing that phase rescales the `d` rows of `U` belonging to the
/// outgoing edges of the vertex, so each node costs a `d x d` solve on top
/// of one inverse per `z` (Woodbury).
pub fn single_phase_average(
    g: &Digraph,
    fam: &ScatteringFamily,
    dis: &Disorder,
    e: usize,
    zs: &[Complex64],
    quadrature: &[(f64, f64)],
) -> Result<Vec<f64>, EstimatorError> {
    check_inner(zs)?;
    if e >= g.edge_count() {
        return Err(invalid(format!("edge {e} out of range")));
    }
    let x = g.edge(e).from;
    let out = g.outgoing(x);
    let d = out.len();
    let u0 = build_unitary(g, fam, &dis.with_phase(x, 0.0))?.into_matrix();
    let rows_out = u0.rows(out.start, d).clone_owned();
    zs.iter()
        .map(|&z| {
            let r0 = resolvent_matrix(&u0, z)?;
            let c = &rows_out * &r0;
            let b = c.columns(out.start, d).clone_owned();
            let a = r0.view((e, out.start), (1, d)).transpose();
            let r0e = r0.row(e).clone_owned();
            let scale = 1.0 - z.norm_sqr();
            let mut total = 0.0;
            for &(theta, w) in quadrature {
                let cm1 = Complex64::from_polar(1.0, theta) - Complex64::ONE;
                let k = CMatrix::identity(d, d) + &b * cm1;
                let y = k.transpose().lu().solve(&a).ok_or(SpectralError::Singular(z))?;
                let row = &r0e - (y.transpose() * &c) * cm1;
                total += w * scale * row.norm_squared();
            }
            Ok(total)
        })
        .collect()
}

/// Disorder average of [`single_phase_average`]: the outer average is Monte
/// Carlo over all phases, the inner one is quadrature over the phase of the
/// source vertex of `e` with `nodes` nodes.
#[allow(clippy::too_many_arguments)]
pub fn mc_spectral_average(
    g: &Digraph,
    fam: &ScatteringFamily,
    mu: &DisorderSpec,
    e: usize,
    zs: &[Complex64],
    nodes: usize,
    n_outer: usize,
    seed: u64,
) -> Result<Vec<SpecAvgPoint>, EstimatorError> {
    mu.validate()?;
    check_samples(n_outer)?;
    check_inner(zs)?;
    if !matches!(mu, DisorderSpec::PointMass { .. }) && nodes < MIN_QUADRATURE_NODES {
        return Err(invalid(format!("need at least {MIN_QUADRATURE_NODES} quadrature nodes, got {nodes}")));
    }
    let quadrature = mu.quadrature(nodes);
    let rows = try_par_map(n_outer, |i| {
        let dis = sample_disorder(g, mu, seed, i as u64)?;
        single_phase_average(g, fam, &dis, e, zs, &quadrature)
    })?;
    let estimates = column_estimates(&rows, zs.len(), seed)?;
    Ok(zs.iter().zip(estimates).map(|(&z, estimate)| SpecAvgPoint { z, estimate }).collect())
}
