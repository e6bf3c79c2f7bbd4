//! Monte Carlo estimators over i.i.d. vertex phases.
//!
//! Realization `i` of every estimator draws its phases from the stream
//! `(seed, i)`, realizations run in parallel, and reductions are done in a
//! fixed order, so results do not depend on the number of threads.

mod decay;
mod fmec;
mod fracmom;
mod gap;
mod identities;
mod smallness;
mod specavg;
mod stats;

use thiserror::Error;

use crate::graph::GraphError;
use crate::spectral::SpectralError;
use crate::walk::WalkError;

pub use decay::{decay_experiment, dynloc_experiment, DecayCurve, DecayParams, DecayReport, DecayRow, DynlocCurve, DynlocParams, DynlocReport, DynlocRow};
pub use fmec::{check_fmec_bound, FmecParams, FmecReport, FmecTerm};
pub use fracmom::{mc_fractional_moment, FracMomPoint, FracMomReport};
pub use gap::{fully_localized_spectrum, gap_probability, gap_probability_bound, GapPoint};
pub use identities::{check_geometric_resolvent, ResolventIdentityReport};
pub use smallness::{calibrate_smallness, resolvent_smallness_check, SmallnessParams, SmallnessPoint, SmallnessScaling};
pub use specavg::{mc_spectral_average, single_phase_average, SpecAvgPoint, MIN_QUADRATURE_NODES};
pub use stats::{fit_decay, fit_decay_estimates, pairwise_sum, par_map, try_par_map, DecayFit, McEstimate, ZGrid};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("need at least 4 usable distances for a decay fit, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub(crate) fn invalid(msg: impl Into<String>) -> EstimatorError {
    EstimatorError::InvalidParameter(msg.into())
}

pub(crate) fn check_fraction(name: &str, s: f64) -> Result<(), EstimatorError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {s}")))
    }
}

pub(crate) fn check_samples(n: usize) -> Result<(), EstimatorError> {
    if n < 2 {
        Err(EstimatorError::TooFewSamples(n))
    } else {
        Ok(())
    }
}

/// Transposes per-realization rows into one estimate per column.
pub(crate) fn column_estimates(rows: &[Vec<f64>], width: usize, seed: u64) -> Result<Vec<McEstimate>, EstimatorError> {
    (0..width)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            McEstimate::from_samples(&col, seed)
        })
        .collect()
}
