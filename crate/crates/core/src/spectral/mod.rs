//! Exact spectral analysis of finite walk unitaries.

mod arcs;
mod eigen;
mod probe;
mod resolvent;

use num_complex::Complex64;
use thiserror::Error;

use crate::graph::GraphError;
use crate::walk::WalkError;

pub use arcs::{ArcSet, ENDPOINT_EXCLUSION};
pub use eigen::{
    edge_measure, eigendecompose, spectral_measure, Atom, Cluster, EigenSystem, SpectralMeasure, DEFAULT_CLUSTER_EPS,
    INPUT_UNITARITY_TOL, WEIGHT_FLOOR,
};
pub use probe::{dynamical_probe, probe_row, weak_convergence_scan, ScanRow};
pub use resolvent::{
    cayley_real_diag, cayley_real_diag_spectral, check_guard, layered_resolvent_row, resolvent_element,
    resolvent_matrix, resolvent_row, spectral_resolvent, GUARD_BAND,
};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not unitary (||U*U - 1|| = {0:e})")]
    NotUnitary(f64),
    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("interpolation parameter must lie in [0, 1], got {0}")]
    BetaRange(f64),
    #[error("z = {0} lies within the guard band around the unit circle")]
    GuardBand(Complex64),
    #[error("U - z is singular at z = {0}")]
    Singular(Complex64),
    #[error("basis index {index} out of range for dimension {dim}")]
    EdgeOutOfRange { index: usize, dim: usize },
    #[error("edge {0} is not in the restriction subset")]
    EdgeOutsideSubset(usize),
    #[error("subset {0} does not contain its predecessor")]
    NotNested(usize),
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
