use num_complex::Complex64;
use serde::Serialize;

use super::{check_samples, column_estimates, fit_decay_estimates, invalid, try_par_map, DecayFit, EstimatorError, McEstimate};
use crate::graph::Digraph;
use crate::spectral::{check_guard, eigendecompose, layered_resolvent_row, probe_row, ArcSet, DEFAULT_CLUSTER_EPS};
use crate::walk::{build_unitary, make_family, sample_disorder, DisorderSpec, FamilyKind, SparseWalk};

/// Slack allowed between the dynamical probe and the correlator.
const PROBE_TOLERANCE: f64 = 1e-10;

/// Edges grouped by the distance of their head from the head of `e`.
fn head_shells(g: &Digraph, e: usize) -> Result<Vec<Vec<usize>>, EstimatorError> {
    let dist = g.distances_from(g.edge(e).to)?;
    let depth = dist.iter().flatten().copied().max().unwrap_or(0);
    let mut shells = vec![Vec::new(); depth + 1];
    for (i, edge) in g.edges().iter().enumerate() {
        if let Some(d) = dist[edge.to] {
            shells[d].push(i);
        }
    }
    Ok(shells)
}

fn shell_means(shells: &[Vec<usize>], values: &[f64]) -> Vec<f64> {
    shells.iter().map(|s| s.iter().map(|&i| values[i]).sum::<f64>() / s.len() as f64).collect()
}

fn check_common(g: &Digraph, e: usize, strengths: &[f64], n_samples: usize, fit_min: usize) -> Result<(), EstimatorError> {
    check_samples(n_samples)?;
    if e >= g.edge_count() {
        return Err(invalid(format!("edge {e} out of range")));
    }
    if strengths.is_empty() {
        return Err(invalid("need at least one strength"));
    }
    if let Some(phi) = strengths.iter().find(|&&p| !(p >= 0.0 && p.is_finite())) {
        return Err(invalid(format!("strength must be finite and >= 0, got {phi}")));
    }
    if fit_min == 0 {
        return Err(invalid("fit_min must be at least 1"));
    }
    Ok(())
}

fn in_fit_range(d: usize, fit_min: usize, fit_max: Option<usize>) -> bool {
    d >= fit_min && fit_max.is_none_or(|m| d <= m)
}

/// Fractional-moment decay away from a fixed edge, for a ladder of
/// near-identity scattering strengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayParams {
    pub e: usize,
    pub s: f64,
    pub z: Complex64,
    pub strengths: Vec<f64>,
    /// Seed of the scattering family; the same for every strength.
    pub family_seed: u64,
    pub n_samples: usize,
    pub seed: u64,
    pub fit_min: usize,
    pub fit_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub distance: usize,
    pub n_edges: usize,
    /// `E` of the mean of `|<e| (U - z)^{-1} f>|^s` over the edges `f` at this distance.
    pub estimate: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve {
    pub strength: f64,
    pub rows: Vec<DecayRow>,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// Sorted by increasing strength.
    pub curves: Vec<DecayCurve>,
    /// Fitted rates are nonincreasing in the strength, up to one combined
    /// standard error per step.
    pub monotone: bool,
}

/// Resolvent rows come from the shell-by-shell solve so that entries far
/// below the largest one keep their relative accuracy. Every strength uses
/// the same disorder realizations.
pub fn decay_experiment(g: &Digraph, mu: &DisorderSpec, p: &DecayParams) -> Result<DecayReport, EstimatorError> {
    mu.validate()?;
    check_common(g, p.e, &p.strengths, p.n_samples, p.fit_min)?;
    if !(p.s > 0.0 && p.s < 1.0 / 3.0) {
        return Err(invalid("s must be < 1/3"));
    }
    check_guard(p.z)?;
    let shells = head_shells(g, p.e)?;
    let mut strengths = p.strengths.clone();
    strengths.sort_by(f64::total_cmp);

    let mut curves = Vec::with_capacity(strengths.len());
    for &strength in &strengths {
        let fam = make_family(g, &FamilyKind::NearIdentity { strength, seed: p.family_seed })?;
        let rows = try_par_map(p.n_samples, |i| {
            let dis = sample_disorder(g, mu, p.seed, i as u64)?;
            let u = build_unitary(g, &fam, &dis)?;
            let row = layered_resolvent_row(g, u.matrix(), p.z, p.e)?;
            let values: Vec<f64> = row.iter().map(|x| x.norm().powf(p.s)).collect();
            Ok(shell_means(&shells, &values))
        })?;
        let estimates = column_estimates(&rows, shells.len(), p.seed)?;
        let rows: Vec<DecayRow> = estimates
            .into_iter()
            .enumerate()
            .map(|(distance, estimate)| DecayRow { distance, n_edges: shells[distance].len(), estimate })
            .collect();
        let points: Vec<(f64, McEstimate)> = rows
            .iter()
            .filter(|r| in_fit_range(r.distance, p.fit_min, p.fit_max)).map(|r| (r.distance as f64, r.estimate)).collect();
        let (fit, fit_error) = match fit_decay_estimates(&points) {
            Ok(f) => (Some(f), None),
            Err(err) => (None, Some(err.to_string())),
        };
        curves.push(DecayCurve { strength, rows, fit, fit_error });
    }
    let monotone = curves.windows(2).all(|w| match (w[0].fit, w[1].fit) {
        (Some(a), Some(b)) => b.rate <= a.rate + (a.rate_std_error.powi(2) + b.rate_std_error.powi(2)).sqrt(),
        _ => true,
    });
    Ok(DecayReport { curves, monotone })
}

/// Dynamical probe `sup_{|n| <= horizon} |<e| U^n P_I f>|` against the
/// correlator `Q(e, f; I)`, averaged by distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynlocParams {
    pub e: usize,
    pub arcs: ArcSet,
    pub horizon: usize,
    pub strengths: Vec<f64>,
    pub family_seed: u64,
    pub n_samples: usize,
    pub seed: u64,
    pub fit_min: usize,
    pub fit_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynlocRow {
    pub distance: usize,
    pub n_edges: usize,
    pub probe: McEstimate,
    pub correlator: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynlocCurve {
    pub strength: f64,
    pub rows: Vec<DynlocRow>,
    /// Fit of the probe means.
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    /// Largest `probe - correlator` over all realizations and edges.
    pub max_excess: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynlocReport {
    pub curves: Vec<DynlocCurve>,
}

pub fn dynloc_experiment(g: &Digraph, mu: &DisorderSpec, p: &DynlocParams) -> Result<DynlocReport, EstimatorError> {
    mu.validate()?;
    check_common(g, p.e, &p.strengths, p.n_samples, p.fit_min)?;
    let shells = head_shells(g, p.e)?;
    let depth = shells.len();
    let mut strengths = p.strengths.clone();
    strengths.sort_by(f64::total_cmp);

    let mut curves = Vec::with_capacity(strengths.len());
    for &strength in &strengths {
        let fam = make_family(g, &FamilyKind::NearIdentity { strength, seed: p.family_seed })?;
        let rows = try_par_map(p.n_samples, |i| {
            let dis = sample_disorder(g, mu, p.seed, i as u64)?;
            let u = build_unitary(g, &fam, &dis)?;
            let eig = eigendecompose(u.matrix(), DEFAULT_CLUSTER_EPS)?;
            let ec = eig.ec_row(p.e, &p.arcs);
            let probe = probe_row(&SparseWalk::from_dense(u.matrix()), &eig, p.e, &p.arcs, p.horizon);
            let excess = probe.iter().zip(&ec).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
            let mut row = shell_means(&shells, &probe);
            row.extend(shell_means(&shells, &ec));
            row.push(excess);
            Ok(row)
        })?;
        let estimates = column_estimates(&rows, 2 * depth, p.seed)?;
        let max_excess = rows.iter().map(|r| r[2 * depth]).fold(f64::NEG_INFINITY, f64::max);
        let rows: Vec<DynlocRow> = (0..depth)
            .map(|d| DynlocRow { distance: d, n_edges: shells[d].len(), probe: estimates[d], correlator: estimates[depth + d] })
            .collect();
        let points: Vec<(f64, McEstimate)> = rows
            .iter()
            .filter(|r| in_fit_range(r.distance, p.fit_min, p.fit_max)).map(|r| (r.distance as f64, r.probe)).collect();
        let (fit, fit_error) = match fit_decay_estimates(&points) {
            Ok(f) => (Some(f), None),
            Err(err) => (None, Some(err.to_string())),
        };
        curves.push(DynlocCurve { strength, rows, fit, fit_error, max_excess, bounded: max_excess <= PROBE_TOLERANCE });
    }
    Ok(DynlocReport { curves })
}
