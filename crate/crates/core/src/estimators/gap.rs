use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{check_samples, column_estimates, invalid, try_par_map, EstimatorError, McEstimate};
use crate::graph::{BallSpec, Digraph};
use crate::walk::{sample_disorder, Disorder, DisorderSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub z: Complex64,
    pub eta: f64,
    /// Estimate of `P(dist(z, spectrum) < eta)`.
    pub estimate: McEstimate,
    pub bound: f64,
    /// `estimate.mean <= bound + 3 std_error`.
    pub pass: bool,
}

/// Eigenvalues of the reflection walk (`S = 1` everywhere) on the edges
/// inside the ball. It swaps each edge with its reverse, so every
/// undirected edge `{u, v}` contributes `+-e^{i (w_u + w_v) / 2}`.
pub fn fully_localized_spectrum(g: &Digraph, dis: &Disorder, ball: BallSpec) -> Result<Vec<Complex64>, EstimatorError> {
    let inside = g.edge_ball(ball.root, ball.radius)?;
    let mut out = Vec::with_capacity(inside.len());
    for i in inside.indices() {
        let edge = g.edge(i);
        if edge.from < edge.to {
            let lambda = Complex64::from_polar(1.0, 0.5 * (dis.phases[edge.from] + dis.phases[edge.to]));
            out.push(lambda);
            out.push(-lambda);
        }
    }
    Ok(out)
}

/// `4 pi^2 ||tau||_inf^2 d |B_n| eta`, with `d` the maximal degree and `|B_n|`
/// the number of vertices in the ball.
pub fn gap_probability_bound(g: &Digraph, mu: &DisorderSpec, ball: BallSpec, eta: f64) -> Result<f64, EstimatorError> {
    let vertices = g.ball_vertices(ball)?.len() as f64;
    let tau = mu.sup_norm();
    Ok(4.0 * PI * PI * tau * tau * g.max_degree() as f64 * vertices * eta)
}

/// Probability that `z` lies within `eta` of the spectrum of the reflection
/// walk restricted to the ball, for every `(z, eta)` pair (z-major order).
#[allow(clippy::too_many_arguments)]
pub fn gap_probability(
    g: &Digraph,
    mu: &DisorderSpec,
    ball: BallSpec,
    zs: &[Complex64],
    etas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<GapPoint>, EstimatorError> {
    mu.validate()?;
    check_samples(n_samples)?;
    if zs.is_empty() || etas.is_empty() {
        return Err(invalid("need at least one z and one eta"));
    }
    if let Some(eta) = etas.iter().find(|&&eta| !(eta > 0.0 && eta.is_finite())) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    if let Some(z) = zs.iter().find(|z| !z.is_finite()) {
        return Err(invalid(format!("z must be finite, got {z}")));
    }
    let rows = try_par_map(n_samples, |i| {
        let dis = sample_disorder(g, mu, seed, i as u64)?;
        let spectrum = fully_localized_spectrum(g, &dis, ball)?;
        let mut row = Vec::with_capacity(zs.len() * etas.len());
        for &z in zs {
            let dist = spectrum.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
            row.extend(etas.iter().map(|&eta| if dist < eta { 1.0 } else { 0.0 }));
        }
        Ok(row)
    })?;
    let estimates = column_estimates(&rows, zs.len() * etas.len(), seed)?;
    let mut out = Vec::with_capacity(estimates.len());
    for (k, estimate) in estimates.into_iter().enumerate() {
        let (z, eta) = (zs[k / etas.len()], etas[k % etas.len()]);
        let bound = gap_probability_bound(g, mu, ball, eta)?;
        let pass = estimate.mean <= bound + 3.0 * estimate.std_error;
        out.push(GapPoint { z, eta, estimate, bound, pass });
    }
    Ok(out)
}
