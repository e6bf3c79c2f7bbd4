use num_complex::Complex64;
use serde::Serialize;

use super::EstimatorError;
use crate::graph::{BallSpec, Digraph};
use crate::spectral::resolvent_matrix;
use crate::walk::{ball_decoupling, build_unitary, Disorder, ScatteringFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventIdentityReport {
    pub z: Complex64,
    pub root: usize,
    pub radius: usize,
    /// `||R - rhs||_F`.
    pub residual: f64,
    /// `||R||_F`, the scale the residual is measured against.
    pub scale: f64,
    pub relative_residual: f64,
    /// Largest `|<a| R_n b>|` with `a` inside and `b` outside the ball of radius `n`.
    pub cross_block_max: f64,
    /// Largest entry of `R_n T_n R_{n+1}` on columns outside `B_{n+1}`.
    pub screened_max: f64,
    pub screened_columns: usize,
}

/// Checks the two-step decoupling identity
/// `R = R_n - R_n T_n R_{n+1} + R_n T_n R T_{n+1} R_{n+1}`, where `R_k` is the
/// resolvent of the walk decoupled on the sphere of radius `k` and
/// `T_k = U - U_k`, together with the vanishing of `R_n T_n R_{n+1}` on
/// edges outside the ball of radius `n + 1`.
pub fn check_geometric_resolvent(
    g: &Digraph,
    fam: &ScatteringFamily,
    dis: &Disorder,
    z: Complex64,
    ball: BallSpec,
) -> Result<ResolventIdentityReport, EstimatorError> {
    let u = build_unitary(g, fam, dis)?.into_matrix();
    let near = ball_decoupling(g, fam, dis, ball)?;
    let far_ball = BallSpec::new(ball.root, ball.radius + 1);
    let far = ball_decoupling(g, fam, dis, far_ball)?;
    let r = resolvent_matrix(&u, z)?;
    let r_near = resolvent_matrix(&near.matrix, z)?;
    let r_far = resolvent_matrix(&far.matrix, z)?;
    let t_near = &u - &near.matrix;
    let t_far = &u - &far.matrix;

    let left = &r_near * &t_near;
    let middle = &left * &r_far;
    let rhs = &r_near - &middle + &left * &r * &t_far * &r_far;
    let residual = (&r - rhs).norm();
    let scale = r.norm();

    let inside = near.inside.indices();
    let cross_block_max = near
        .inside
        .complement()
        .indices()
        .iter()
        .flat_map(|&j| inside.iter().map(move |&i| (i, j)))
        .map(|(i, j)| r_near[(i, j)].norm().max(r_near[(j, i)].norm()))
        .fold(0.0, f64::max);
    let outside = far.inside.complement().indices();
    let screened_max = outside
        .iter()
        .flat_map(|&j| middle.column(j).iter().map(|x| x.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    Ok(ResolventIdentityReport {
        z,
        root: ball.root,
        radius: ball.radius,
        residual,
        scale,
        relative_residual: residual / scale,
        cross_block_max,
        screened_max,
        screened_columns: outside.len(),
    })
}
