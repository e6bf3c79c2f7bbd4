use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use super::{ArcSet, SpectralError};
use crate::{CMatrix, CVector};

/// Eigenvalues closer than this are merged into one eigenprojection.
pub const DEFAULT_CLUSTER_EPS: f64 = 1e-8;

/// Off-diagonal weights `|<psi| P phi>|` at or below this are treated as
/// zero by [`SpectralMeasure::interpolated_ec`]. Exact zeros come out of the
/// eigensolver at ~1e-16, and `x^beta` would lift them to ~1e-3 for small `beta`.
pub const WEIGHT_FLOOR: f64 = 1e-13;

/// Largest `||U* U - 1||_F` accepted by [`eigendecompose`].
pub const INPUT_UNITARITY_TOL: f64 = 1e-8;

/// Group of numerically coincident eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Unit-modulus representative (normalized mean of the members).
    pub value: Complex64,
    /// Column indices of the eigenvectors spanning the eigenspace.
    pub members: Vec<usize>,
}

/// Eigendecomposition of a unitary matrix with clustered eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    values: Vec<Complex64>,
    vectors: CMatrix,
    clusters: Vec<Cluster>,
}

/// Diagonalizes a unitary matrix.
///
/// The complex Schur form of a normal matrix is diagonal, so the Schur
/// vectors form an orthonormal eigenbasis. Eigenvalues are grouped by
/// single linkage on the circle with gap `< cluster_eps`, and the vectors of
/// each group are re-orthonormalized.
pub fn eigendecompose(u: &CMatrix, cluster_eps: f64) -> Result<EigenSystem, SpectralError> {
    if !(cluster_eps > 0.0) {
        return Err(SpectralError::InvalidParameter(format!("cluster tolerance must be > 0, got {cluster_eps}")));
    }
    if u.nrows() != u.ncols() {
        return Err(SpectralError::InvalidParameter("matrix is not square".into()));
    }
    let n = u.nrows();
    if n == 0 {
        return Ok(EigenSystem { values: Vec::new(), vectors: CMatrix::zeros(0, 0), clusters: Vec::new() });
    }
    let residual = (u.adjoint() * u - CMatrix::identity(n, n)).norm();
    if residual > INPUT_UNITARITY_TOL {
        return Err(SpectralError::NotUnitary(residual));
    }
    let (mut vectors, t) = Schur::new(u.clone()).unpack();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let clusters = cluster(&values, cluster_eps);
    for c in &clusters {
        if c.members.len() > 1 {
            orthonormalize(&mut vectors, &c.members);
        }
    }
    Ok(EigenSystem { values, vectors, clusters })
}

fn angle(z: Complex64) -> f64 {
    z.arg().rem_euclid(TAU)
}

fn cluster(values: &[Complex64], eps: f64) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| angle(values[a]).total_cmp(&angle(values[b])).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<usize> = None;
    for &i in &order {
        match prev {
            Some(p) if (values[i] - values[p]).norm() < eps => groups.last_mut().expect("open group").push(i),
            _ => groups.push(vec![i]),
        }
        prev = Some(i);
    }
    if groups.len() > 1 {
        let first = groups[0][0];
        let last = *groups.last().and_then(|g| g.last()).expect("non-empty");
        if (values[first] - values[last]).norm() < eps {
            let tail = groups.pop().expect("non-empty");
            groups[0].splice(0..0, tail);
        }
    }
    groups
        .into_iter()
        .map(|mut members| {
            let mean: Complex64 = members.iter().map(|&i| values[i]).sum();
            members.sort_unstable();
            let value = if mean.norm() > 0.0 { mean / mean.norm() } else { values[members[0]] };
            Cluster { value, members }
        })
        .collect()
}

/// Modified Gram-Schmidt, applied twice, on the given columns.
fn orthonormalize(v: &mut CMatrix, cols: &[usize]) {
    for _ in 0..2 {
        for (k, &c) in cols.iter().enumerate() {
            for &p in &cols[..k] {
                let proj = v.column(p).dotc(&v.column(c));
                let pc = v.column(p).clone_owned();
                v.column_mut(c).axpy(-proj, &pc, Complex64::ONE);
            }
            let norm = v.column(c).norm();
            v.column_mut(c).unscale_mut(norm);
        }
    }
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalue of each eigenvector column.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Orthonormal eigenvectors as columns.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// `||U V - V diag(lambda)||_F`.
    pub fn reconstruction_residual(&self, u: &CMatrix) -> f64 {
        let lambda = CMatrix::from_diagonal(&CVector::from_column_slice(&self.values));
        (u * &self.vectors - &self.vectors * lambda).norm()
    }

    /// `||V* V - 1||_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        (self.vectors.adjoint() * &self.vectors - CMatrix::identity(n, n)).norm()
    }

    /// Largest `| |lambda| - 1 |`.
    pub fn modulus_defect(&self) -> f64 {
        self.values.iter().map(|l| (l.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Eigenprojection of cluster `alpha` as a dense matrix.
    pub fn projector(&self, alpha: usize) -> CMatrix {
        let n = self.dim();
        let mut p = CMatrix::zeros(n, n);
        for &k in &self.clusters[alpha].members {
            let v = self.vectors.column(k);
            p += v * v.adjoint();
        }
        p
    }

    /// `P_I e` for basis vector `e`.
    pub fn project_basis(&self, e: usize, arcs: &ArcSet) -> CVector {
        let mut out = CVector::zeros(self.dim());
        for c in self.clusters.iter().filter(|c| arcs.contains(c.value)) {
            for &k in &c.members {
                out.axpy(self.vectors[(e, k)].conj(), &self.vectors.column(k), Complex64::ONE);
            }
        }
        out
    }

    /// `<e| P_alpha f>` for every cluster, as `(value, weight)` pairs.
    pub fn edge_weights(&self, e: usize, f: usize) -> Vec<(Complex64, Complex64)> {
        self.clusters
            .iter()
            .map(|c| {
                let w = c.members.iter().map(|&k| self.vectors[(e, k)] * self.vectors[(f, k)].conj()).sum();
                (c.value, w)
            })
            .collect()
    }

    /// Eigenfunction correlator `Q(e, f; I)` between basis vectors.
    pub fn edge_ec(&self, e: usize, f: usize, arcs: &ArcSet) -> f64 {
        self.clusters
            .iter()
            .filter(|c| arcs.contains(c.value))
            .map(|c| c.members.iter().map(|&k| self.vectors[(e, k)] * self.vectors[(f, k)].conj()).sum::<Complex64>().norm())
            .sum()
    }

    /// `Q(e, f; I)` for a fixed `e` and every basis vector `f`.
    pub fn ec_row(&self, e: usize, arcs: &ArcSet) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        let mut acc = vec![Complex64::ZERO; n];
        for c in self.clusters.iter().filter(|c| arcs.contains(c.value)) {
            acc.iter_mut().for_each(|a| *a = Complex64::ZERO);
            for &k in &c.members {
                let ve = self.vectors[(e, k)];
                for (f, a) in acc.iter_mut().enumerate() {
                    *a += ve * self.vectors[(f, k)].conj();
                }
            }
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += a.norm();
            }
        }
        out
    }
}

/// One atom of a spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: Complex64,
    /// `<psi| P_alpha phi>`.
    pub weight: Complex64,
    /// `<psi| P_alpha psi>`.
    pub diag: f64,
}

/// The spectral measure of a pair of unit vectors, one atom per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
}

const NORMALIZATION_TOL: f64 = 1e-10;

pub fn spectral_measure(eig: &EigenSystem, psi: &CVector, phi: &CVector) -> Result<SpectralMeasure, SpectralError> {
    for v in [psi, phi] {
        if v.len() != eig.dim() {
            return Err(SpectralError::InvalidParameter(format!(
                "vector of length {} for a {}-dimensional operator",
                v.len(),
                eig.dim()
            )));
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(SpectralError::NotNormalized(norm));
        }
    }
    let a = eig.vectors.adjoint() * psi;
    let b = eig.vectors.adjoint() * phi;
    let atoms = eig
        .clusters
        .iter()
        .map(|c| {
            let weight = c.members.iter().map(|&k| a[k].conj() * b[k]).sum();
            let diag = c.members.iter().map(|&k| a[k].norm_sqr()).sum();
            Atom { value: c.value, weight, diag }
        })
        .collect();
    Ok(SpectralMeasure { atoms })
}

/// Spectral measure of two basis vectors.
pub fn edge_measure(eig: &EigenSystem, e: usize, f: usize) -> Result<SpectralMeasure, SpectralError> {
    let n = eig.dim();
    if e >= n || f >= n {
        return Err(SpectralError::EdgeOutOfRange { index: e.max(f), dim: n });
    }
    let unit = |i: usize| {
        let mut v = CVector::zeros(n);
        v[i] = Complex64::ONE;
        v
    };
    spectral_measure(eig, &unit(e), &unit(f))
}

impl SpectralMeasure {
    /// `Q(psi, phi; I) = sum_{lambda in I} |<psi| P phi>|`.
    pub fn ec(&self, arcs: &ArcSet) -> f64 {
        self.atoms.iter().filter(|a| arcs.contains(a.value)).map(|a| a.weight.norm()).sum()
    }

    /// Interpolated correlator `sum_{lambda in I} <psi|P psi>^(1-beta) |<psi|P phi>|^beta`,
    /// with terms of vanishing diagonal weight set to zero. For `beta > 0`,
    /// weights at or below [`WEIGHT_FLOOR`] count as zero.
    pub fn interpolated_ec(&self, arcs: &ArcSet, beta: f64) -> Result<f64, SpectralError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(SpectralError::BetaRange(beta));
        }
        Ok(self
            .atoms
            .iter()
            .filter(|a| arcs.contains(a.value) && a.diag > 0.0)
            .filter(|a| beta == 0.0 || a.weight.norm() > WEIGHT_FLOOR)
            .map(|a| a.diag.powf(1.0 - beta) * a.weight.norm().powf(beta))
            .sum())
    }

    pub fn total_diag(&self) -> f64 {
        self.atoms.iter().map(|a| a.diag).sum()
    }

    /// `sum |<psi| P phi>|^2`.
    pub fn parseval_sum(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.norm_sqr()).sum()
    }

    /// CSV with columns `lambda_re,lambda_im,weight_abs,diag_weight`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda_re", "lambda_im", "weight_abs", "diag_weight"])?;
        for a in &self.atoms {
            out.write_record([
                a.value.re.to_string(),
                a.value.im.to_string(),
                a.weight.norm().to_string(),
                a.diag.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
