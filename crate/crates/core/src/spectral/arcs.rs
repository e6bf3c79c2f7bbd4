use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Points closer than this to an arc endpoint are treated as outside.
pub const ENDPOINT_EXCLUSION: f64 = 1e-12;

/// Finite union of open arcs of the unit circle.
///
/// Each arc is stored as a start angle in `[0, 2pi)` and a positive length;
/// an arc may wrap through angle 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSet {
    arcs: Vec<(f64, f64)>,
    full: bool,
}

impl ArcSet {
    pub fn empty() -> Self {
        Self { arcs: Vec::new(), full: false }
    }

    /// The whole circle.
    pub fn full() -> Self {
        Self { arcs: Vec::new(), full: true }
    }

    /// Union of the counter-clockwise arcs `(lo, hi)`; `hi < lo` wraps through 0.
    pub fn new(arcs: &[(f64, f64)]) -> Result<Self, SpectralError> {
        let mut pieces = Vec::with_capacity(arcs.len());
        for &(lo, hi) in arcs {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(SpectralError::InvalidArc(format!("non-finite endpoint in ({lo}, {hi})")));
            }
            let start = lo.rem_euclid(TAU);
            let len = if hi - lo >= TAU { TAU } else { (hi - lo).rem_euclid(TAU) };
            if len <= 0.0 {
                return Err(SpectralError::InvalidArc(format!("arc ({lo}, {hi}) is empty")));
            }
            pieces.push((start, len));
        }
        Ok(Self::normalized(pieces))
    }

    /// Upper half circle `(0, pi)`.
    pub fn upper_half() -> Self {
        Self::normalized(vec![(0.0, std::f64::consts::PI)])
    }

    fn normalized(mut pieces: Vec<(f64, f64)>) -> Self {
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (start, len) in pieces {
            match merged.last_mut() {
                // Strict overlap only: open arcs that merely touch leave the
                // shared endpoint out of the union.
                Some(last) if start < last.0 + last.1 => {
                    last.1 = last.1.max(start + len - last.0);
                }
                _ => merged.push((start, len)),
            }
        }
        while merged.len() > 1 {
            let first = merged[0];
            let last = *merged.last().expect("non-empty");
            if last.0 + last.1 > first.0 + TAU {
                let end = (last.0 + last.1).max(first.0 + first.1 + TAU);
                merged.last_mut().expect("non-empty").1 = end - last.0;
                merged.remove(0);
            } else {
                break;
            }
        }
        if merged.iter().any(|a| a.1 > TAU) {
            return Self::full();
        }
        Self { arcs: merged, full: false }
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.arcs.is_empty()
    }

    /// Arcs as `(start, length)` pairs.
    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    /// Total angular measure.
    pub fn measure(&self) -> f64 {
        if self.full {
            TAU
        } else {
            self.arcs.iter().map(|a| a.1).sum()
        }
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        if self.full {
            return true;
        }
        let theta = theta.rem_euclid(TAU);
        self.arcs.iter().any(|&(start, len)| {
            let delta = (theta - start).rem_euclid(TAU);
            delta > ENDPOINT_EXCLUSION && delta < len - ENDPOINT_EXCLUSION
        })
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        self.contains_angle(lambda.arg())
    }

    /// Angular distance from `theta` to the nearest arc endpoint; infinite for
    /// the full and the empty set.
    pub fn endpoint_distance(&self, theta: f64) -> f64 {
        let mut best = f64::INFINITY;
        for &(start, len) in &self.arcs {
            for end in [start, start + len] {
                let d = (theta - end).rem_euclid(TAU);
                best = best.min(d.min(TAU - d));
            }
        }
        best
    }
}
