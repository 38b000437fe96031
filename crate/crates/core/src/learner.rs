//! The round protocol shared by every learner: predict a value for `uᵀθ`,
//! then observe on which side of the prediction the hidden value fell.

use crate::baselines::Ellipsoid;
use crate::polytope::{CutSense, Polytope, PolytopeError};
use crate::sampling::SamplingError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Feedback for a prediction `x` on direction `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `x ≤ uᵀθ` (ties land here).
    Below,
    /// `x > uᵀθ`
    Above,
}

impl Side {
    /// The halfspace of `θ` consistent with this answer.
    pub fn kept(self) -> CutSense {
        match self {
            Side::Below => CutSense::Ge,
            Side::Above => CutSense::Le,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Below => "below",
            Side::Above => "above",
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Below => Side::Above,
            Side::Above => Side::Below,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("knowledge set became degenerate: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Body(PolytopeError),
    #[error(transparent)]
    Sampling(SamplingError),
}

impl From<PolytopeError> for LearnerError {
    fn from(e: PolytopeError) -> Self {
        match e {
            PolytopeError::Degenerate { .. } | PolytopeError::Empty => LearnerError::Degenerate(e.to_string()),
            e => LearnerError::Body(e),
        }
    }
}

impl From<SamplingError> for LearnerError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::Body(b) => b.into(),
            e => LearnerError::Sampling(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub x: f64,
    /// The point the cut will pass through.
    pub z: Vec<f64>,
    /// Width of the learner's uncertainty along `u` exceeds `ε`.
    pub n_t_flag: bool,
}

/// Per-round diagnostics reported alongside a prediction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Telemetry {
    /// Number of small directions held by the learner.
    pub n_small: usize,
    /// Smallest LP width among rejected thin-direction candidates.
    pub min_width: Option<f64>,
    /// Monte-Carlo volume of the projected knowledge set.
    pub phi: Option<f64>,
}

/// Read-only view of the learner's knowledge set, for white-box adversaries.
#[derive(Debug, Clone, Copy)]
pub enum KnowledgeView<'a> {
    Polytope(&'a Polytope),
    Ellipsoid(&'a Ellipsoid),
}

pub trait Learner {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn predict(&mut self, u: &[f64]) -> Result<Prediction, LearnerError>;
    fn observe(&mut self, u: &[f64], x: f64, side: Side) -> Result<(), LearnerError>;
    /// No future prediction can be off by more than `ε`.
    fn converged(&self) -> bool;
    /// Membership of `θ` in the knowledge set, for soundness checks.
    fn contains(&self, theta: &[f64]) -> bool;
    fn knowledge(&self) -> KnowledgeView<'_>;
    fn telemetry(&self) -> Telemetry;
}

pub(crate) fn check_unit(u: &[f64], d: usize) -> Result<(), LearnerError> {
    if u.len() != d {
        return Err(LearnerError::InvalidInput(format!("direction of length {} in dimension {d}", u.len())));
    }
    let n = crate::geom::norm(u);
    if !((n - 1.0).abs() <= 1e-9) {
        return Err(LearnerError::InvalidInput(format!("direction norm {n} is not 1")));
    }
    Ok(())
}
