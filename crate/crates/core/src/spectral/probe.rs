use num_complex::Complex64;

use super::{ArcSet, EigenSystem, SpectralError};
use crate::graph::{ConsistentSubset, Digraph};
use crate::walk::{build_unitary, decoupled_matrix, Disorder, ScatteringFamily, SparseWalk};

/// `sup_{|n| <= horizon} |<e| U^n P_I(U) f>|`, summed over eigenprojections:
/// `<e| U^n P_I f> = sum_{lambda in I} lambda^n <e| P f>`.
pub fn dynamical_probe(eig: &EigenSystem, e: usize, f: usize, arcs: &ArcSet, horizon: usize) -> f64 {
    let terms: Vec<(Complex64, Complex64)> =
        eig.edge_weights(e, f).into_iter().filter(|(value, _)| arcs.contains(*value)).collect();
    if terms.is_empty() {
        return 0.0;
    }
    let mut forward: Vec<Complex64> = terms.iter().map(|t| t.1).collect();
    let mut backward = forward.clone();
    let mut sup = forward.iter().sum::<Complex64>().norm();
    for _ in 0..horizon {
        for (k, (value, _)) in terms.iter().enumerate() {
            forward[k] *= value;
            backward[k] *= value.conj();
        }
        sup = sup.max(forward.iter().sum::<Complex64>().norm());
        sup = sup.max(backward.iter().sum::<Complex64>().norm());
    }
    sup
}

/// The probe for a fixed `e` and every `f` at once.
///
/// Uses `<e| U^n P_I f> = conj(((U*)^n P_I e)_f)` for `n >= 0`, and `U`
/// in place of `U*` for `n < 0`, so each time step is one sparse product.
pub fn probe_row(u: &SparseWalk, eig: &EigenSystem, e: usize, arcs: &ArcSet, horizon: usize) -> Vec<f64> {
    let start: Vec<Complex64> = eig.project_basis(e, arcs).iter().copied().collect();
    let mut sup: Vec<f64> = start.iter().map(|v| v.norm()).collect();
    for forward in [true, false] {
        let mut v = start.clone();
        let mut w = vec![Complex64::ZERO; v.len()];
        for _ in 0..horizon {
            if forward {
                u.apply_adjoint(&v, &mut w);
            } else {
                u.apply(&v, &mut w);
            }
            std::mem::swap(&mut v, &mut w);
            for (s, x) in sup.iter_mut().zip(&v) {
                *s = s.max(x.norm());
            }
        }
    }
    sup
}

/// Monomial moments `<e| V^k f> - <e| U^k f>`, `|k| <= degree`, for one
/// restriction `V = U^{F}` of the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// Number of directed edges in the restriction.
    pub subset_len: usize,
    /// `(k, |error|)` for `k = -degree..=degree`.
    pub errors: Vec<(i64, f64)>,
}

impl ScanRow {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

fn moments(op: &SparseWalk, e: usize, f: usize, degree: usize) -> Vec<(i64, Complex64)> {
    let n = op.dim();
    let mut out = Vec::with_capacity(2 * degree + 1);
    for forward in [true, false] {
        let mut v = vec![Complex64::ZERO; n];
        v[f] = Complex64::ONE;
        let mut w = vec![Complex64::ZERO; n];
        if forward {
            out.push((0, v[e]));
        }
        for k in 1..=degree {
            if forward {
                op.apply(&v, &mut w);
            } else {
                op.apply_adjoint(&v, &mut w);
            }
            std::mem::swap(&mut v, &mut w);
            out.push((if forward { k as i64 } else { -(k as i64) }, v[e]));
        }
    }
    out.sort_by_key(|m| m.0);
    out
}

/// Compares the trigonometric moments of the spectral measure of `(e, f)`
/// under the full walk and under restrictions to an increasing sequence of
/// edge subsets. `e` and `f` are global edge indices and must lie in every
/// subset.
///
/// The restricted walk is applied in the global basis as the decoupled
/// operator `U^F ⊕ U^{F^c}`; on vectors supported in `F` this is `U^F`.
pub fn weak_convergence_scan(
    g: &Digraph,
    fam: &ScatteringFamily,
    dis: &Disorder,
    subsets: &[ConsistentSubset],
    e: usize,
    f: usize,
    degree: usize,
) -> Result<Vec<ScanRow>, SpectralError> {
    for (i, w) in subsets.windows(2).enumerate() {
        if !w[0].is_subset_of(&w[1]) {
            return Err(SpectralError::NotNested(i + 1));
        }
    }
    let full = SparseWalk::from_dense(build_unitary(g, fam, dis)?.matrix());
    let reference = moments(&full, e, f, degree);
    subsets
        .iter()
        .map(|subset| {
            for i in [e, f] {
                if !subset.contains(i) {
                    return Err(SpectralError::EdgeOutsideSubset(i));
                }
            }
            let restricted = SparseWalk::from_dense(&decoupled_matrix(g, fam, dis, subset)?);
            let errors = moments(&restricted, e, f, degree)
                .into_iter()
                .zip(&reference)
                .map(|((k, a), (_, b))| (k, (a - b).norm()))
                .collect();
            Ok(ScanRow { subset_len: subset.len(), errors })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec};
    use crate::spectral::{eigendecompose, DEFAULT_CLUSTER_EPS};
    use crate::walk::{make_family, sample_disorder, DisorderSpec, FamilyKind};
    use crate::CMatrix;

    fn instance(kind: FamilyKind) -> (Digraph, CMatrix) {
        let g = build_graph(&GraphSpec::Cycle { k: 8 }).unwrap();
        let fam = make_family(&g, &kind).unwrap();
        let dis = sample_disorder(&g, &DisorderSpec::Uniform, 4, 0).unwrap();
        let u = build_unitary(&g, &fam, &dis).unwrap().into_matrix();
        (g, u)
    }

    #[test]
    fn trivial_cases() {
        let (_, u) = instance(FamilyKind::Haar { seed: 1 });
        let eig = eigendecompose(&u, DEFAULT_CLUSTER_EPS).unwrap();
        assert_eq!(dynamical_probe(&eig, 0, 3, &ArcSet::empty(), 50), 0.0);
        assert!((dynamical_probe(&eig, 2, 2, &ArcSet::full(), 0) - 1.0).abs() < 1e-12);
        assert!(dynamical_probe(&eig, 2, 5, &ArcSet::full(), 0) < 1e-12);
    }

    #[test]
    fn reflection_walk_has_period_two() {
        let g = build_graph(&GraphSpec::Cycle { k: 8 }).unwrap();
        let fam = ScatteringFamily::identity(&g);
        let u = build_unitary(&g, &fam, &Disorder::zero(&g)).unwrap().into_matrix();
        let eig = eigendecompose(&u, DEFAULT_CLUSTER_EPS).unwrap();
        let arcs = ArcSet::new(&[(-0.5, 0.5)]).unwrap();
        for (e, f) in [(0, 0), (0, 1), (0, g.reverse_index(0)), (3, 9)] {
            let pf = eig.project_basis(f, &arcs);
            let upf = &u * &pf;
            let expected = pf[e].norm().max(upf[e].norm());
            assert!((dynamical_probe(&eig, e, f, &arcs, 25) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn row_route_matches_pair_route_and_is_monotone() {
        let (_, u) = instance(FamilyKind::NearIdentity { strength: 0.8, seed: 2 });
        let eig = eigendecompose(&u, DEFAULT_CLUSTER_EPS).unwrap();
        let arcs = ArcSet::new(&[(0.2, 2.0), (3.5, 4.4)]).unwrap();
        let sp = SparseWalk::from_dense(&u);
        let row = probe_row(&sp, &eig, 5, &arcs, 60);
        let mut prev = 0.0;
        for horizon in [0, 10, 60] {
            let p = dynamical_probe(&eig, 5, 9, &arcs, horizon);
            assert!(p >= prev);
            prev = p;
        }
        for (f, &r) in row.iter().enumerate() {
            let p = dynamical_probe(&eig, 5, f, &arcs, 60);
            assert!((r - p).abs() < 1e-10);
            assert!(p <= eig.edge_ec(5, f, &arcs) + 1e-10);
        }
    }

    #[test]
    fn scan_errors_vanish_inside_the_light_cone() {
        let g = build_graph(&GraphSpec::Cycle { k: 30 }).unwrap();
        let fam = make_family(&g, &FamilyKind::Haar { seed: 6 }).unwrap();
        let dis = sample_disorder(&g, &DisorderSpec::Uniform, 2, 0).unwrap();
        let e = g.edge_index(crate::Edge::new(1, 0)).unwrap();
        let f = g.edge_index(crate::Edge::new(0, 1)).unwrap();
        let subsets: Vec<_> = (2..16).map(|l| g.edge_ball(0, l).unwrap()).collect();
        let degree = 6;
        let rows = weak_convergence_scan(&g, &fam, &dis, &subsets, e, f, degree).unwrap();
        for (l, row) in (2..16).zip(&rows) {
            assert_eq!(row.errors.iter().find(|x| x.0 == 0).unwrap().1, 0.0);
            if l > 1 + degree + 1 {
                assert_eq!(row.max_error(), 0.0, "L = {l}");
            }
        }
        assert!(rows[0].max_error() > 1e-6);

        let reversed: Vec<_> = subsets.iter().rev().cloned().collect();
        assert!(matches!(
            weak_convergence_scan(&g, &fam, &dis, &reversed, e, f, 2),
            Err(SpectralError::NotNested(1))
        ));
    }
}
