//! Random scattering quantum walks on finite graphs: operator assembly, exact
//! spectral analysis, and Monte Carlo estimators for localization quantities.

// `!(x > 0.0)` style checks reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimators;
pub mod graph;
pub mod harness;
pub mod seeding;
pub mod spectral;
pub mod walk;

pub use num_complex::Complex64;

/// Dense complex matrix used for every walk operator.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;

pub use graph::{build_graph, BallSpec, ConsistentSubset, Digraph, Edge, GraphError, GraphSpec};
pub use walk::{
    build_unitary, make_family, restrict, sample_disorder, scattering_distance, Disorder, DisorderSpec, FamilyKind,
    ScatteringFamily, WalkError, WalkOperator,
};
pub use spectral::{eigendecompose, ArcSet, EigenSystem, SpectralError, SpectralMeasure};
pub use estimators::{DecayFit, EstimatorError, McEstimate, ZGrid};
