use num_complex::Complex64;
use serde::Serialize;

use super::{check_fraction, check_samples, invalid, try_par_map, EstimatorError, McEstimate};
use crate::graph::{BallSpec, Digraph};
use crate::spectral::{check_guard, resolvent_element};
use crate::walk::{ball_decoupling, sample_disorder, DisorderSpec, ScatteringFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessParams {
    pub ball: BallSpec,
    pub z: Complex64,
    pub s: f64,
    /// Hölder exponent, `p > 1 / (1 - s)`.
    pub p: f64,
    /// Global indices of two edges inside the ball that are not each other's reverse.
    pub e: usize,
    pub f: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl SmallnessParams {
    /// `s / (1 + 2 s p)`.
    pub fn exponent(&self) -> f64 {
        self.s / (1.0 + 2.0 * self.s * self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessPoint {
    pub radius: usize,
    pub ball_vertices: usize,
    /// `sup_x ||S(x) - 1||_HS`.
    pub distance_to_identity: f64,
    /// Largest admissible distance, `|B_n|^{-2} d^{-(1 + 2ps) / (sp)}`.
    pub threshold: f64,
    /// `E |<e| (U^{B_n} - z)^{-1} f>|^s`.
    pub estimate: McEstimate,
    /// `(distance * |B_n|^2)^{s / (1 + 2sp)}`.
    pub base: f64,
}

/// Estimates the off-block resolvent moment of the walk restricted to a
/// ball and the scale it is compared with. Fails if the scattering family
/// is too far from the identity for the ball.
pub fn resolvent_smallness_check(
    g: &Digraph,
    fam: &ScatteringFamily,
    mu: &DisorderSpec,
    params: &SmallnessParams,
) -> Result<SmallnessPoint, EstimatorError> {
    let SmallnessParams { ball, z, s, p, e, f, n_samples, seed } = *params;
    mu.validate()?;
    check_fraction("s", s)?;
    check_samples(n_samples)?;
    check_guard(z)?;
    if !(p > 1.0 / (1.0 - s)) {
        return Err(invalid(format!("p must exceed 1 / (1 - s) = {}", 1.0 / (1.0 - s))));
    }
    let inside = g.edge_ball(ball.root, ball.radius)?;
    if !inside.contains(e) || !inside.contains(f) {
        return Err(invalid("both edges must lie inside the ball"));
    }
    if e == f || g.reverse_index(e) == f {
        return Err(invalid("edges must not be equal or reverses of each other"));
    }
    let ball_vertices = g.ball_vertices(ball)?.len();
    let distance = fam.distance_to_identity();
    let d = g.max_degree() as f64;
    let threshold = (ball_vertices as f64).powi(-2) * d.powf(-(1.0 + 2.0 * p * s) / (s * p));
    if distance >= threshold {
        return Err(invalid(format!(
            "scattering distance {distance:e} is not below the threshold {threshold:e} for this ball"
        )));
    }
    let samples = try_par_map(n_samples, |i| {
        let dis = sample_disorder(g, mu, seed, i as u64)?;
        let inner = ball_decoupling(g, fam, &dis, ball)?.inner();
        let (le, lf) = (inner.local_index(e).expect("e in ball"), inner.local_index(f).expect("f in ball"));
        Ok(resolvent_element(inner.matrix(), z, le, lf)?.norm().powf(s))
    })?;
    let estimate = McEstimate::from_samples(&samples, seed)?;
    let base = (distance * (ball_vertices * ball_vertices) as f64).powf(params.exponent());
    Ok(SmallnessPoint { radius: ball.radius, ball_vertices, distance_to_identity: distance, threshold, estimate, base })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessScaling {
    /// Index of the point the constant was fitted on.
    pub calibration_index: usize,
    pub constant: f64,
    /// `estimate / (constant * base)` per point.
    pub ratios: Vec<f64>,
    pub slack: f64,
    /// Every ratio is at most `slack`.
    pub pass: bool,
}

/// Fixes the constant on the point with the fewest ball vertices (ties go
/// to the largest scattering distance) and checks every other point against
/// it with multiplicative slack.
pub fn calibrate_smallness(points: &[SmallnessPoint], slack: f64) -> Result<SmallnessScaling, EstimatorError> {
    if points.is_empty() {
        return Err(invalid("no points to calibrate"));
    }
    if points.iter().any(|pt| !(pt.base > 0.0)) {
        return Err(invalid("calibration needs a nonzero scattering distance at every point"));
    }
    let calibration_index = (0..points.len())
        .min_by(|&a, &b| {
            let (pa, pb) = (&points[a], &points[b]);
            pa.ball_vertices
                .cmp(&pb.ball_vertices)
                .then(pb.distance_to_identity.total_cmp(&pa.distance_to_identity))
        })
        .expect("nonempty");
    let cal = &points[calibration_index];
    let constant = cal.estimate.mean / cal.base;
    let ratios: Vec<f64> = points.iter().map(|pt| pt.estimate.mean / (constant * pt.base)).collect();
    let pass = ratios.iter().all(|&r| r <= slack);
    Ok(SmallnessScaling { calibration_index, constant, ratios, slack, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec};
    use crate::walk::{make_family, FamilyKind};
    use crate::Edge;

    fn params(g: &Digraph) -> SmallnessParams {
        SmallnessParams {
            ball: BallSpec::new(0, 5),
            z: Complex64::new(0.0, 0.8),
            s: 0.5,
            p: 3.0,
            e: g.edge_index(Edge::new(1, 0)).unwrap(),
            f: g.edge_index(Edge::new(1, 2)).unwrap(),
            n_samples: 200,
            seed: 6,
        }
    }

    #[test]
    fn reflection_walk_has_no_off_block_resolvent() {
        let g = build_graph(&GraphSpec::Cycle { k: 24 }).unwrap();
        let fam = ScatteringFamily::identity(&g);
        let pt = resolvent_smallness_check(&g, &fam, &DisorderSpec::Uniform, &params(&g)).unwrap();
        assert_eq!(pt.estimate.mean, 0.0);
        assert_eq!(pt.ball_vertices, 11);
        assert!((pt.threshold - 2f64.powf(-8.0 / 3.0) / 121.0).abs() < 1e-15);
    }

    #[test]
    fn smaller_scattering_gives_smaller_moment() {
        let g = build_graph(&GraphSpec::Cycle { k: 24 }).unwrap();
        let p = params(&g);
        let pts: Vec<SmallnessPoint> = [0.001, 0.0005]
            .iter()
            .map(|&phi| {
                let fam = make_family(&g, &FamilyKind::NearIdentity { strength: phi, seed: 3 }).unwrap();
                resolvent_smallness_check(&g, &fam, &DisorderSpec::Uniform, &p).unwrap()
            })
            .collect();
        assert!(pts[0].estimate.mean / pts[1].estimate.mean >= 2f64.powf(p.exponent()) / 1.5);
        let scaling = calibrate_smallness(&pts, 1.5).unwrap();
        assert_eq!(scaling.calibration_index, 0);
        assert!(scaling.pass, "{scaling:?}");
    }

    #[test]
    fn rejects_hypothesis_violations() {
        let g = build_graph(&GraphSpec::Cycle { k: 24 }).unwrap();
        let strong = make_family(&g, &FamilyKind::NearIdentity { strength: 0.1, seed: 3 }).unwrap();
        assert!(resolvent_smallness_check(&g, &strong, &DisorderSpec::Uniform, &params(&g)).is_err());
        let fam = make_family(&g, &FamilyKind::NearIdentity { strength: 0.001, seed: 3 }).unwrap();
        let mut p = params(&g);
        p.f = g.reverse_index(p.e);
        assert!(resolvent_smallness_check(&g, &fam, &DisorderSpec::Uniform, &p).is_err());
        let mut p = params(&g);
        p.p = 1.5;
        assert!(resolvent_smallness_check(&g, &fam, &DisorderSpec::Uniform, &p).is_err());
    }
}
