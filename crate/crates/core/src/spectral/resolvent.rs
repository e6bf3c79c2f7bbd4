use num_complex::Complex64;

use super::{EigenSystem, SpectralError};
use crate::graph::Digraph;
use crate::{CMatrix, CVector};

/// Resolvents are only evaluated for `| |z| - 1 | >` this value.
pub const GUARD_BAND: f64 = 1e-6;

pub fn check_guard(z: Complex64) -> Result<(), SpectralError> {
    if (z.norm() - 1.0).abs() > GUARD_BAND && z.is_finite() {
        Ok(())
    } else {
        Err(SpectralError::GuardBand(z))
    }
}

fn shifted(u: &CMatrix, z: Complex64) -> CMatrix {
    let mut m = u.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= z;
    }
    m
}

fn unit(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = Complex64::ONE;
    v
}

fn check_index(u: &CMatrix, i: usize) -> Result<(), SpectralError> {
    if i < u.nrows() {
        Ok(())
    } else {
        Err(SpectralError::EdgeOutOfRange { index: i, dim: u.nrows() })
    }
}

/// `(U - z)^{-1}` by LU decomposition.
pub fn resolvent_matrix(u: &CMatrix, z: Complex64) -> Result<CMatrix, SpectralError> {
    check_guard(z)?;
    shifted(u, z).lu().try_inverse().ok_or(SpectralError::Singular(z))
}

/// `<e| (U - z)^{-1} f>`.
pub fn resolvent_element(u: &CMatrix, z: Complex64, e: usize, f: usize) -> Result<Complex64, SpectralError> {
    check_guard(z)?;
    check_index(u, e)?;
    check_index(u, f)?;
    let x = shifted(u, z).lu().solve(&unit(u.nrows(), f)).ok_or(SpectralError::Singular(z))?;
    Ok(x[e])
}

/// Row `e` of `(U - z)^{-1}`.
pub fn resolvent_row(u: &CMatrix, z: Complex64, e: usize) -> Result<CVector, SpectralError> {
    check_guard(z)?;
    check_index(u, e)?;
    shifted(u, z).transpose().lu().solve(&unit(u.nrows(), e)).ok_or(SpectralError::Singular(z))
}

/// `sum_k (lambda_k - z)^{-1} |v_k><v_k|`.
pub fn spectral_resolvent(eig: &EigenSystem, z: Complex64) -> Result<CMatrix, SpectralError> {
    check_guard(z)?;
    let v = eig.vectors();
    let mut scaled = v.clone();
    for (k, &lambda) in eig.values().iter().enumerate() {
        let c = Complex64::ONE / (lambda - z);
        for i in 0..scaled.nrows() {
            scaled[(i, k)] *= c;
        }
    }
    Ok(scaled * v.adjoint())
}

/// `<e| Re((U + z)(U - z)^{-1}) e>`, evaluated as
/// `(1 - |z|^2) || row_e (U - z)^{-1} ||^2`, which is manifestly nonnegative
/// inside the unit disk.
pub fn cayley_real_diag(u: &CMatrix, z: Complex64, e: usize) -> Result<f64, SpectralError> {
    let row = resolvent_row(u, z, e)?;
    Ok((1.0 - z.norm_sqr()) * row.norm_squared())
}

/// Same quantity from an eigendecomposition:
/// `(1 - |z|^2) sum_k |v_k(e)|^2 / |lambda_k - z|^2`.
pub fn cayley_real_diag_spectral(eig: &EigenSystem, z: Complex64, e: usize) -> Result<f64, SpectralError> {
    check_guard(z)?;
    let v = eig.vectors();
    let sum: f64 = eig
        .values()
        .iter()
        .enumerate()
        .map(|(k, &lambda)| v[(e, k)].norm_sqr() / (lambda - z).norm_sqr())
        .sum();
    Ok((1.0 - z.norm_sqr()) * sum)
}

/// Row `e` of `(U - z)^{-1}` by block elimination over distance shells.
///
/// `u` acts on the full edge basis of `g`. Edges are grouped by the graph
/// distance of their head from the head of `e`; the walk only couples
/// neighboring shells, so the shifted operator is block tridiagonal. It is
/// first rewritten as `M = 1 - U/z` (outside the disk) or `M = 1 - z U*`
/// (inside), which has numerical range in the right half plane; the row is
/// then built shell by shell as a product of small, well-conditioned
/// blocks. Entries therefore keep their relative accuracy even when they
/// are many orders of magnitude below the largest one, which a dense solve
/// cannot offer. Edges not reachable from `e` get exact zeros.
pub fn layered_resolvent_row(g: &Digraph, u: &CMatrix, z: Complex64, e: usize) -> Result<Vec<Complex64>, SpectralError> {
    check_guard(z)?;
    check_index(u, e)?;
    let n = g.edge_count();
    if u.nrows() != n {
        return Err(SpectralError::InvalidParameter("layered solve needs the full edge basis".into()));
    }
    let head = g.edge(e).to;
    let dist = g.distances_from(head)?;
    let depth = dist.iter().flatten().copied().max().unwrap_or(0);
    let mut shells: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
    for (i, edge) in g.edges().iter().enumerate() {
        if let Some(d) = dist[edge.to] {
            shells[d].push(i);
        }
    }
    let outside = z.norm() > 1.0;
    let zi = Complex64::ONE / z;
    let m_entry = |r: usize, c: usize| -> Complex64 {
        let a = if outside { u[(r, c)] * zi } else { z * u[(c, r)].conj() };
        if r == c { Complex64::ONE - a } else { -a }
    };
    let block = |rows: &[usize], cols: &[usize]| CMatrix::from_fn(rows.len(), cols.len(), |i, j| m_entry(rows[i], cols[j]));

    // Right-to-left Schur complements.
    let mut g_blocks: Vec<CMatrix> = vec![CMatrix::zeros(0, 0); depth + 1];
    for k in (0..=depth).rev() {
        let mut a = block(&shells[k], &shells[k]);
        if k < depth {
            let up = block(&shells[k], &shells[k + 1]);
            let down = block(&shells[k + 1], &shells[k]);
            a -= up * &g_blocks[k + 1] * down;
        }
        g_blocks[k] = a.try_inverse().ok_or(SpectralError::Singular(z))?;
    }

    let mut row = vec![Complex64::ZERO; n];
    let pos = shells[0].iter().position(|&i| i == e).expect("e lies in its own shell");
    let mut r = g_blocks[0].row(pos).clone_owned();
    for (j, &i) in shells[0].iter().enumerate() {
        row[i] = r[j];
    }
    for k in 1..=depth {
        let up = block(&shells[k - 1], &shells[k]);
        r = -(r * up) * &g_blocks[k];
        for (j, &i) in shells[k].iter().enumerate() {
            row[i] = r[j];
        }
    }

    if outside {
        // (U - z)^{-1} = -(1/z) M^{-1}
        Ok(row.into_iter().map(|x| -x * zi).collect())
    } else {
        // (U - z)^{-1} = M^{-1} U*: (r U*)_j = sum_i r_i conj(U_{j i})
        Ok((0..n)
            .map(|j| row.iter().enumerate().fold(Complex64::ZERO, |acc, (i, &ri)| acc + ri * u[(j, i)].conj()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec};
    use crate::spectral::{eigendecompose, DEFAULT_CLUSTER_EPS};
    use crate::walk::{build_unitary, make_family, sample_disorder, DisorderSpec, FamilyKind};
    use proptest::prelude::*;

    fn walk(spec: GraphSpec, kind: FamilyKind, seed: u64) -> (Digraph, CMatrix) {
        let g = build_graph(&spec).unwrap();
        let fam = make_family(&g, &kind).unwrap();
        let dis = sample_disorder(&g, &DisorderSpec::Uniform, seed, 0).unwrap();
        let u = build_unitary(&g, &fam, &dis).unwrap().into_matrix();
        (g, u)
    }

    fn swap() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[Complex64::ZERO, Complex64::ONE, Complex64::ONE, Complex64::ZERO])
    }

    #[test]
    fn two_by_two_closed_form() {
        let z = Complex64::new(0.5, 0.0);
        let r = resolvent_element(&swap(), z, 0, 1).unwrap();
        assert!((r - Complex64::new(4.0 / 3.0, 0.0)).norm() < 1e-14);
        // general phases: det = z^2 - e^{i(a+b)}
        let (a, b) = (0.4, 1.9);
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::ZERO, Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b), Complex64::ZERO],
        );
        let z = Complex64::new(0.3, 0.6);
        let det = z * z - Complex64::from_polar(1.0, a + b);
        let expected = -Complex64::from_polar(1.0, a) / det;
        assert!((resolvent_element(&u, z, 0, 1).unwrap() - expected).norm() < 1e-13);
    }

    #[test]
    fn guard_band() {
        assert!(matches!(
            resolvent_element(&swap(), Complex64::new(1.0 + 1e-7, 0.0), 0, 0),
            Err(SpectralError::GuardBand(_))
        ));
        assert!(resolvent_element(&swap(), Complex64::new(1.0 + 2e-6, 0.0), 0, 0).is_ok());
        assert!(resolvent_element(&swap(), Complex64::new(0.5, 0.0), 0, 2).is_err());
    }

    #[test]
    fn cayley_at_origin_is_one() {
        let (_, u) = walk(GraphSpec::Cycle { k: 6 }, FamilyKind::Haar { seed: 2 }, 1);
        for e in 0..u.nrows() {
            assert!((cayley_real_diag(&u, Complex64::ZERO, e).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cayley_two_by_two_closed_form() {
        let z = Complex64::new(0.2, -0.5);
        // (U - z)^{-1} = (U + z) / (1 - z^2) for the swap
        let inv = (swap() + CMatrix::identity(2, 2) * z) / (Complex64::ONE - z * z);
        let expected = (1.0 - z.norm_sqr()) * inv.row(0).norm_squared();
        assert!((cayley_real_diag(&swap(), z, 0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn layered_row_matches_dense() {
        for (spec, seed) in [
            (GraphSpec::Cycle { k: 14 }, 1),
            (GraphSpec::TorusGrid { a: 4, b: 3 }, 2),
            (GraphSpec::Tree { branching: 2, depth: 3 }, 3),
            (GraphSpec::Path { k: 9 }, 4),
        ] {
            let (g, u) = walk(spec, FamilyKind::NearIdentity { strength: 0.6, seed }, seed);
            for z in [Complex64::new(1.01, 0.0), Complex64::new(0.0, 0.9), Complex64::new(-1.5, 0.3), Complex64::new(0.3, 0.2)] {
                let dense = resolvent_row(&u, z, 3).unwrap();
                let layered = layered_resolvent_row(&g, &u, z, 3).unwrap();
                let scale = dense.iter().map(|x| x.norm()).fold(0.0, f64::max);
                for (a, b) in dense.iter().zip(&layered) {
                    assert!((a - b).norm() < 1e-11 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn layered_row_keeps_tiny_entries() {
        // Nearly reflecting walk: entries fall by many orders of magnitude
        // per step, far below the dense solver's absolute accuracy.
        let (g, u) = walk(GraphSpec::Cycle { k: 40 }, FamilyKind::NearIdentity { strength: 0.01, seed: 3 }, 5);
        let z = Complex64::new(1.01, 0.0);
        let row = layered_resolvent_row(&g, &u, z, 0).unwrap();
        let by_distance = |d: usize| {
            g.edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| g.distance(g.edge(0).to, e.to).unwrap() == Some(d))
                .map(|(i, _)| row[i].norm())
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (by_distance(8), by_distance(9), by_distance(10));
        assert!(a < 1e-10 && a > 0.0);
        // consecutive ratios agree: geometric decay, not a noise floor
        assert!(((b / a).ln() - (c / b).ln()).abs() < 1.0);
        assert!(b / a < 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn resolvent_identities(seed in any::<u64>(), r in prop_oneof![0.2f64..0.95, 1.05f64..2.0], t in 0.0f64..std::f64::consts::TAU) {
            let (_, u) = walk(GraphSpec::TorusGrid { a: 3, b: 3 }, FamilyKind::Haar { seed }, seed);
            let z = Complex64::from_polar(r, t);
            let res = resolvent_matrix(&u, z).unwrap();
            let n = u.nrows();
            let id = CMatrix::identity(n, n);
            let cayley = (&u + &id * z) * &res;
            let lhs = (cayley.clone() - &id) / (z * 2.0);
            prop_assert!((lhs - &res).norm() < 1e-10);

            let eig = eigendecompose(&u, DEFAULT_CLUSTER_EPS).unwrap();
            let spectral = spectral_resolvent(&eig, z).unwrap();
            prop_assert!((spectral - &res).norm() < 1e-9);

            let bound = 1.0 / (1.0 - r).abs();
            prop_assert!(res.iter().all(|x| x.norm() <= bound + 1e-12));

            for e in [0usize, 7, 20] {
                let direct = 1.0 + 2.0 * (z * res[(e, e)]).re;
                let via_row = cayley_real_diag(&u, z, e).unwrap();
                prop_assert!((direct - via_row).abs() < 1e-10 * (1.0 + direct.abs()));
                prop_assert!((cayley[(e, e)].re - direct).abs() < 1e-10 * (1.0 + direct.abs()));
                prop_assert!((cayley_real_diag_spectral(&eig, z, e).unwrap() - via_row).abs() < 1e-9 * (1.0 + direct.abs()));
                if r < 1.0 {
                    prop_assert!(via_row >= -1e-12);
                }
            }
        }
    }
}
