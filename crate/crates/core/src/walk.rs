//! Scattering families, random phases, and assembly of the walk unitary.
//!
//! The walk acts on the edge basis of a [`Digraph`]. An amplitude arriving at
//! `x` along `y -> x` is scattered by `S(x)` onto the edges `x -> z` and picks
//! up the phase `e^{i w_x}` of the vertex it leaves from:
//!
//! ```text
//! U |y -> x>  =  e^{i w_x}  sum_z  S(x)[z, y]  |x -> z>
//! ```
//!
//! where `S(x)[z, y]` is indexed by the positions of `z` and `y` in the
//! ascending neighbor list of `x`.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BallSpec, ConsistentSubset, Digraph, Edge, GraphError};
use crate::seeding::realization_rng;
use crate::CMatrix;

/// Largest edge-basis dimension a dense walk matrix may have.
pub const MAX_DIMENSION: usize = 4096;

/// Tolerance on `||S* S - I||_F` for a scattering matrix.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("scattering strength must be >= 0, got {0}")]
    NegativeStrength(f64),
    #[error("scattering matrix at vertex {vertex} is not unitary (residual {residual:e})")]
    NotUnitary { vertex: usize, residual: f64 },
    #[error("scattering matrix at vertex {vertex} is {got}x{got}, degree is {expected}")]
    DegreeMismatch { vertex: usize, expected: usize, got: usize },
    #[error("object built for a different graph: {0}")]
    GraphMismatch(String),
    #[error("operator dimension {0} exceeds the dense cap of {MAX_DIMENSION}")]
    DimensionCap(usize),
    #[error("invalid disorder: {0}")]
    InvalidDisorder(String),
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How the per-vertex scattering matrices are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyKind {
    /// `S(x) = 1`: every amplitude is reflected back along its edge.
    Identity,
    /// `S(x) = exp(i a H_x)` with `H_x` a random Hermitian matrix of operator
    /// norm 1 and `a` chosen so that `||S(x) - 1||_HS <= strength`.
    NearIdentity { strength: f64, seed: u64 },
    /// Independent Haar-distributed unitaries.
    Haar { seed: u64 },
    /// `S(x) = (2/d) J - 1`.
    Grover,
    /// Discrete Fourier transform matrix.
    Dft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringFamily {
    matrices: Vec<CMatrix>,
}

fn unitarity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - CMatrix::identity(n, n)).norm()
}

fn complex_gaussian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

fn near_identity_matrix(rng: &mut ChaCha8Rng, d: usize, strength: f64) -> CMatrix {
    let a = complex_gaussian(rng, d);
    let h = (&a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let op_norm = eig.eigenvalues.amax();
    let levels: Vec<f64> = eig.eigenvalues.iter().map(|v| v / op_norm).collect();
    let hs_norm = levels.iter().map(|v| v * v).sum::<f64>().sqrt();
    // |e^{it} - 1| <= |t|, so ||S - 1||_HS <= a ||H||_HS = strength.
    let a = strength / hs_norm;
    let phases = DVector::from_iterator(d, levels.iter().map(|v| Complex64::from_polar(1.0, a * v)));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

fn haar_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let qr = complex_gaussian(rng, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let fix = DVector::from_iterator(
        d,
        (0..d).map(|i| {
            let x = r[(i, i)];
            if x.norm() > 0.0 { x / x.norm() } else { Complex64::new(1.0, 0.0) }
        }),
    );
    q * CMatrix::from_diagonal(&fix)
}

fn grover_matrix(d: usize) -> CMatrix {
    let c = 2.0 / d as f64;
    CMatrix::from_fn(d, d, |i, j| Complex64::new(if i == j { c - 1.0 } else { c }, 0.0))
}

fn dft_matrix(d: usize) -> CMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |j, k| Complex64::from_polar(norm, TAU * ((j * k) % d) as f64 / d as f64))
}

pub fn make_family(g: &Digraph, kind: &FamilyKind) -> Result<ScatteringFamily, WalkError> {
    let mut rng = match *kind {
        FamilyKind::NearIdentity { strength, seed } => {
            if !(strength >= 0.0) {
                return Err(WalkError::NegativeStrength(strength));
            }
            Some(ChaCha8Rng::seed_from_u64(seed))
        }
        FamilyKind::Haar { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let matrices = (0..g.vertex_count())
        .map(|x| {
            let d = g.degree(x);
            match *kind {
                FamilyKind::Identity => CMatrix::identity(d, d),
                FamilyKind::NearIdentity { strength, .. } => {
                    near_identity_matrix(rng.as_mut().expect("seeded"), d, strength)
                }
                FamilyKind::Haar { .. } => haar_matrix(rng.as_mut().expect("seeded"), d),
                FamilyKind::Grover => grover_matrix(d),
                FamilyKind::Dft => dft_matrix(d),
            }
        })
        .collect();
    ScatteringFamily::from_matrices(g, matrices)
}

impl ScatteringFamily {
    pub fn from_matrices(g: &Digraph, matrices: Vec<CMatrix>) -> Result<Self, WalkError> {
        if matrices.len() != g.vertex_count() {
            return Err(WalkError::GraphMismatch(format!(
                "{} scattering matrices for {} vertices",
                matrices.len(),
                g.vertex_count()
            )));
        }
        for (x, m) in matrices.iter().enumerate() {
            let d = g.degree(x);
            if m.nrows() != d || m.ncols() != d {
                return Err(WalkError::DegreeMismatch { vertex: x, expected: d, got: m.nrows() });
            }
            let residual = unitarity_error(m);
            if residual > UNITARITY_TOL {
                return Err(WalkError::NotUnitary { vertex: x, residual });
            }
        }
        Ok(Self { matrices })
    }

    pub fn identity(g: &Digraph) -> Self {
        Self { matrices: (0..g.vertex_count()).map(|x| CMatrix::identity(g.degree(x), g.degree(x))).collect() }
    }

    pub fn matrix(&self, x: usize) -> &CMatrix {
        &self.matrices[x]
    }

    pub fn vertex_count(&self) -> usize {
        self.matrices.len()
    }

    /// `sup_x ||S(x) - 1||_HS`.
    pub fn distance_to_identity(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| (m - CMatrix::identity(m.nrows(), m.nrows())).norm())
            .fold(0.0, f64::max)
    }
}

/// `sup_x ||S(x) - S'(x)||_HS`.
pub fn scattering_distance(a: &ScatteringFamily, b: &ScatteringFamily) -> Result<f64, WalkError> {
    if a.matrices.len() != b.matrices.len() {
        return Err(WalkError::GraphMismatch("families have different vertex counts".into()));
    }
    let mut sup = 0.0f64;
    for (x, (ma, mb)) in a.matrices.iter().zip(&b.matrices).enumerate() {
        if ma.shape() != mb.shape() {
            return Err(WalkError::DegreeMismatch { vertex: x, expected: ma.nrows(), got: mb.nrows() });
        }
        sup = sup.max((ma - mb).norm());
    }
    Ok(sup)
}

/// Distribution of the vertex phases on `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisorderSpec {
    Uniform,
    /// Piecewise-constant density on equal bins of `[0, 2pi)`.
    Density { table: Vec<f64> },
    PointMass { theta: f64 },
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<(), WalkError> {
        match self {
            DisorderSpec::Uniform => Ok(()),
            DisorderSpec::Density { table } => {
                if table.is_empty() {
                    return Err(WalkError::InvalidDisorder("density table is empty".into()));
                }
                if table.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
                    return Err(WalkError::InvalidDisorder("density values must be finite and >= 0".into()));
                }
                let mass: f64 = table.iter().sum::<f64>() * TAU / table.len() as f64;
                if (mass - 1.0).abs() > 1e-9 {
                    return Err(WalkError::InvalidDisorder(format!(
                        "density integrates to {mass}, expected 1"
                    )));
                }
                Ok(())
            }
            DisorderSpec::PointMass { theta } => {
                if theta.is_finite() {
                    Ok(())
                } else {
                    Err(WalkError::InvalidDisorder("point mass location must be finite".into()))
                }
            }
        }
    }

    /// `||tau||_inf`; infinite for a point mass.
    pub fn sup_norm(&self) -> f64 {
        match self {
            DisorderSpec::Uniform => 1.0 / TAU,
            DisorderSpec::Density { table } => table.iter().copied().fold(0.0, f64::max),
            DisorderSpec::PointMass { .. } => f64::INFINITY,
        }
    }

    /// Draws one phase in `[0, 2pi)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DisorderSpec::Uniform => rng.random::<f64>() * TAU,
            DisorderSpec::Density { table } => {
                let width = TAU / table.len() as f64;
                let u = rng.random::<f64>();
                let v = rng.random::<f64>();
                let mut acc = 0.0;
                let mut bin = table.len() - 1;
                for (k, &t) in table.iter().enumerate() {
                    acc += t * width;
                    if u < acc {
                        bin = k;
                        break;
                    }
                }
                ((bin as f64 + v) * width).min(TAU.next_down())
            }
            DisorderSpec::PointMass { theta } => theta.rem_euclid(TAU),
        }
    }

    /// Quadrature nodes and weights for integrating against the phase
    /// distribution: a periodic trapezoid rule on `m` half-step-shifted nodes
    /// with density weights, renormalized to total weight 1.
    pub fn quadrature(&self, m: usize) -> Vec<(f64, f64)> {
        match self {
            DisorderSpec::PointMass { theta } => vec![(theta.rem_euclid(TAU), 1.0)],
            DisorderSpec::Uniform => {
                (0..m).map(|j| ((j as f64 + 0.5) * TAU / m as f64, 1.0 / m as f64)).collect()
            }
            DisorderSpec::Density { table } => {
                let nodes: Vec<(f64, f64)> = (0..m)
                    .map(|j| {
                        let theta = (j as f64 + 0.5) * TAU / m as f64;
                        let bin = ((theta / TAU * table.len() as f64) as usize).min(table.len() - 1);
                        (theta, table[bin])
                    })
                    .collect();
                let total: f64 = nodes.iter().map(|n| n.1).sum();
                nodes.into_iter().map(|(t, w)| (t, w / total)).collect()
            }
        }
    }
}

/// One phase per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Disorder {
    pub phases: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

impl Disorder {
    /// Fixed phases, reduced to `[0, 2pi)`.
    pub fn from_phases(phases: Vec<f64>) -> Self {
        Self { phases: phases.into_iter().map(|p| p.rem_euclid(TAU)).collect(), seed: 0, index: 0 }
    }

    pub fn zero(g: &Digraph) -> Self {
        Self::from_phases(vec![0.0; g.vertex_count()])
    }

    /// Shifts every phase by `theta`.
    pub fn shifted(&self, theta: f64) -> Self {
        Self {
            phases: self.phases.iter().map(|p| (p + theta).rem_euclid(TAU)).collect(),
            seed: self.seed,
            index: self.index,
        }
    }

    pub fn with_phase(&self, vertex: usize, theta: f64) -> Self {
        let mut out = self.clone();
        out.phases[vertex] = theta.rem_euclid(TAU);
        out
    }
}

/// I.i.d. phases for realization `index`; deterministic in `(seed, index)`.
pub fn sample_disorder(g: &Digraph, spec: &DisorderSpec, seed: u64, index: u64) -> Result<Disorder, WalkError> {
    spec.validate()?;
    let mut rng = realization_rng(seed, index);
    let phases = (0..g.vertex_count()).map(|_| spec.sample(&mut rng)).collect();
    Ok(Disorder { phases, seed, index })
}

/// A walk unitary, on the full edge space or on the span of a subset of edges.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    matrix: CMatrix,
    basis: Vec<usize>,
    subset: Option<ConsistentSubset>,
    disorder: (u64, u64),
}

impl WalkOperator {
    fn from_global(global: &CMatrix, subset: Option<ConsistentSubset>, disorder: &Disorder) -> Self {
        let basis = match &subset {
            Some(f) => f.indices(),
            None => (0..global.nrows()).collect(),
        };
        let matrix = CMatrix::from_fn(basis.len(), basis.len(), |i, j| global[(basis[i], basis[j])]);
        Self { matrix, basis, subset, disorder: (disorder.seed, disorder.index) }
    }

    /// Wraps a matrix acting on the full edge space.
    pub fn from_matrix(matrix: CMatrix) -> Self {
        let basis = (0..matrix.nrows()).collect();
        Self { matrix, basis, subset: None, disorder: (0, 0) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Global edge index of each basis vector.
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// Position of global edge `edge` in this operator's basis.
    pub fn local_index(&self, edge: usize) -> Option<usize> {
        self.basis.binary_search(&edge).ok()
    }

    /// The restriction subset, `None` for the full operator.
    pub fn subset(&self) -> Option<&ConsistentSubset> {
        self.subset.as_ref()
    }

    /// `(seed, index)` of the disorder realization used.
    pub fn disorder_key(&self) -> (u64, u64) {
        self.disorder
    }
}

fn check_inputs(g: &Digraph, fam: &ScatteringFamily, dis: &Disorder) -> Result<(), WalkError> {
    if g.edge_count() > MAX_DIMENSION {
        return Err(WalkError::DimensionCap(g.edge_count()));
    }
    if fam.vertex_count() != g.vertex_count() {
        return Err(WalkError::GraphMismatch("family and graph vertex counts differ".into()));
    }
    if dis.phases.len() != g.vertex_count() {
        return Err(WalkError::GraphMismatch("disorder and graph vertex counts differ".into()));
    }
    for x in 0..g.vertex_count() {
        if fam.matrix(x).nrows() != g.degree(x) {
            return Err(WalkError::DegreeMismatch { vertex: x, expected: g.degree(x), got: fam.matrix(x).nrows() });
        }
    }
    Ok(())
}

/// Dense walk matrix on the full edge basis, with the identity used as the
/// scattering matrix at every vertex flagged in `reflecting`.
pub fn assemble(g: &Digraph, fam: &ScatteringFamily, dis: &Disorder, reflecting: &[bool]) -> Result<CMatrix, WalkError> {
    check_inputs(g, fam, dis)?;
    let n = g.edge_count();
    let mut m = CMatrix::zeros(n, n);
    for x in 0..g.vertex_count() {
        let phase = Complex64::from_polar(1.0, dis.phases[x]);
        let s = fam.matrix(x);
        let out = g.outgoing(x);
        for (col_pos, col) in g.incoming(x).enumerate() {
            if reflecting.get(x).copied().unwrap_or(false) {
                m[(out.start + col_pos, col)] = phase;
            } else {
                for (row_pos, row) in out.clone().enumerate() {
                    m[(row, col)] = phase * s[(row_pos, col_pos)];
                }
            }
        }
    }
    Ok(m)
}

pub fn build_unitary(g: &Digraph, fam: &ScatteringFamily, dis: &Disorder) -> Result<WalkOperator, WalkError> {
    let m = assemble(g, fam, dis, &[])?;
    Ok(WalkOperator::from_global(&m, None, dis))
}

fn check_subset(g: &Digraph, f: &ConsistentSubset) -> Result<(), WalkError> {
    // Re-validate: a subset built for another graph would slip through otherwise.
    ConsistentSubset::from_flags(g, f.flags().to_vec())?;
    Ok(())
}

/// `U^F ⊕ U^{F^c}` on the full edge basis: identity scattering at every
/// vertex that has incoming edges both in and outside `F`.
pub fn decoupled_matrix(
    g: &Digraph,
    fam: &ScatteringFamily,
    dis: &Disorder,
    f: &ConsistentSubset,
) -> Result<CMatrix, WalkError> {
    check_subset(g, f)?;
    let mut reflecting = vec![false; g.vertex_count()];
    for x in f.boundary_vertices(g) {
        reflecting[x] = true;
    }
    assemble(g, fam, dis, &reflecting)
}

/// The restrictions `(U^F, U^{F^c})` with reflecting boundary conditions.
pub fn restrict(
    g: &Digraph,
    fam: &ScatteringFamily,
    dis: &Disorder,
    f: &ConsistentSubset,
) -> Result<(WalkOperator, WalkOperator), WalkError> {
    let m = decoupled_matrix(g, fam, dis, f)?;
    Ok((
        WalkOperator::from_global(&m, Some(f.clone()), dis),
        WalkOperator::from_global(&m, Some(f.complement()), dis),
    ))
}

/// The walk decoupled along a sphere: identity scattering on every vertex of
/// `S_n(r)`, which leaves the span of the edges inside `B_n(r)` invariant.
#[derive(Debug, Clone)]
pub struct BallDecoupling {
    pub ball: BallSpec,
    /// Edges with both endpoints in the ball.
    pub inside: ConsistentSubset,
    /// `U^{B_n} ⊕ U^{B_n^c}` on the full edge basis.
    pub matrix: CMatrix,
    disorder: Disorder,
}

impl BallDecoupling {
    pub fn inner(&self) -> WalkOperator {
        WalkOperator::from_global(&self.matrix, Some(self.inside.clone()), &self.disorder)
    }

    pub fn outer(&self) -> WalkOperator {
        WalkOperator::from_global(&self.matrix, Some(self.inside.complement()), &self.disorder)
    }
}

pub fn ball_decoupling(
    g: &Digraph,
    fam: &ScatteringFamily,
    dis: &Disorder,
    ball: BallSpec,
) -> Result<BallDecoupling, WalkError> {
    let mut reflecting = vec![false; g.vertex_count()];
    for x in g.sphere_vertices(ball)? {
        reflecting[x] = true;
    }
    let matrix = assemble(g, fam, dis, &reflecting)?;
    let inside = g.edge_ball(ball.root, ball.radius)?;
    Ok(BallDecoupling { ball, inside, matrix, disorder: dis.clone() })
}

/// `T = U - U^F ⊕ U^{F^c}` on the full edge basis.
pub fn boundary_operator(full: &WalkOperator, inner: &WalkOperator, outer: &WalkOperator) -> Result<CMatrix, WalkError> {
    let n = full.dim();
    if full.basis().iter().enumerate().any(|(i, &b)| i != b) {
        return Err(WalkError::BasisMismatch("first operator must act on the full edge space".into()));
    }
    let mut seen = vec![false; n];
    for &b in inner.basis().iter().chain(outer.basis()) {
        if b >= n || seen[b] {
            return Err(WalkError::BasisMismatch("restriction bases must partition the edge set".into()));
        }
        seen[b] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(WalkError::BasisMismatch("restriction bases must cover the edge set".into()));
    }
    let mut t = full.matrix().clone();
    for block in [inner, outer] {
        let basis = block.basis();
        for (j, &bj) in basis.iter().enumerate() {
            for (i, &bi) in basis.iter().enumerate() {
                t[(bi, bj)] -= block.matrix()[(i, j)];
            }
        }
    }
    Ok(t)
}

/// Frobenius norm of `U* U - 1`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    unitarity_error(m)
}

/// Largest Frobenius norm of `U P_x^in - P_x^out U` over all vertices, for a
/// matrix on the full edge basis.
pub fn intertwining_residual(g: &Digraph, u: &CMatrix) -> f64 {
    let n = g.edge_count();
    let mut worst = 0.0f64;
    for x in 0..g.vertex_count() {
        let mut incoming = vec![false; n];
        for i in g.incoming(x) {
            incoming[i] = true;
        }
        let out = g.outgoing(x);
        let mut sum = 0.0;
        for c in 0..n {
            for r in 0..n {
                let lhs = if incoming[c] { u[(r, c)] } else { Complex64::ZERO };
                let rhs = if out.contains(&r) { u[(r, c)] } else { Complex64::ZERO };
                sum += (lhs - rhs).norm_sqr();
            }
        }
        worst = worst.max(sum.sqrt());
    }
    worst
}

/// Largest modulus of an entry `<u->v| U |y->x>` with `u != x`, i.e. outside
/// the nearest-neighbor support pattern. Exactly zero for an assembled walk.
pub fn column_support_violation(g: &Digraph, u: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for (c, col) in g.edges().iter().enumerate() {
        for (r, row) in g.edges().iter().enumerate() {
            if row.from != col.to {
                worst = worst.max(u[(r, c)].norm());
            }
        }
    }
    worst
}

/// Column-compressed copy of a walk matrix for repeated products.
#[derive(Debug, Clone)]
pub struct SparseWalk {
    dim: usize,
    columns: Vec<Vec<(usize, Complex64)>>,
}

impl SparseWalk {
    pub fn from_dense(m: &CMatrix) -> Self {
        let columns = (0..m.ncols())
            .map(|c| (0..m.nrows()).filter(|&r| m[(r, c)] != Complex64::ZERO).map(|r| (r, m[(r, c)])).collect())
            .collect();
        Self { dim: m.nrows(), columns }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nonzeros(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// `out = U v`.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::ZERO);
        for (c, col) in self.columns.iter().enumerate() {
            let vc = v[c];
            if vc == Complex64::ZERO {
                continue;
            }
            for &(r, a) in col {
                out[r] += a * vc;
            }
        }
    }

    /// `out = U* v`.
    pub fn apply_adjoint(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (c, col) in self.columns.iter().enumerate() {
            out[c] = col.iter().fold(Complex64::ZERO, |acc, &(r, a)| acc + a.conj() * v[r]);
        }
    }
}

/// Writes the nonzero entries as `row_edge col_edge re im` lines, with edges
/// given by their global indices.
pub fn write_matrix_text<W: Write>(op: &WalkOperator, mut w: W) -> std::io::Result<()> {
    let basis = op.basis();
    let m = op.matrix();
    for (j, &bj) in basis.iter().enumerate() {
        for (i, &bi) in basis.iter().enumerate() {
            let v = m[(i, j)];
            if v != Complex64::ZERO {
                writeln!(w, "{bi} {bj} {} {}", v.re, v.im)?;
            }
        }
    }
    Ok(())
}

/// Edge list of a graph as `index from to` lines.
pub fn write_edge_list<W: Write>(g: &Digraph, mut w: W) -> std::io::Result<()> {
    for (i, Edge { from, to }) in g.edges().iter().enumerate() {
        writeln!(w, "{i} {from} {to}")?;
    }
    Ok(())
}
