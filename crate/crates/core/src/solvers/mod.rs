//! Weighted centroids, divergence-ball projection and moment-constrained
//! projection.
//!
//! Each solver returns the unique minimizer certified by its stationarity
//! condition, together with the fitted Lagrange multipliers and the residuals
//! of the conditions it solved.

mod ball;
mod centroid;
mod moments;

pub use ball::project_ball;
pub use centroid::{
    bregman_centroid_vector, bregman_vector_divergence, bregman_vector_gradient, centroid, CentroidProblem,
};
pub(crate) use moments::affine_projection;
pub use moments::{project_moments, MomentConstraintSet};

use crate::distribution::DiscreteDistribution;
use crate::error::{DivError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Multipliers {
    /// Normalization multiplier `C`.
    pub c: f64,
    /// Moment multipliers `β_k`, for moment projections.
    pub beta: Option<Vec<f64>>,
    /// Line position of a ball projection.
    pub alpha_star: Option<f64>,
    /// Every line position where `D(P‖𝓛_α)` crosses the radius, when there
    /// is more than one.
    pub alpha_crossings: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub solution: DiscreteDistribution,
    pub multipliers: Multipliers,
    pub stationarity_residual: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn check_weights(weights: &[f64], expected: usize, simplex_tol: f64) -> Result<()> {
    if weights.len() != expected {
        return Err(DivError::DimensionMismatch { expected, found: weights.len() });
    }
    if expected == 0 {
        return Err(DivError::InvalidWeights("at least one point is required".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(DivError::InvalidWeights(format!("weight {w} is not a finite nonnegative number")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > simplex_tol {
        return Err(DivError::InvalidWeights(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

pub(crate) fn non_convergence(iterations: usize, stationarity: f64, constraint: f64) -> DivError {
    DivError::NonConvergence { iterations, residual: stationarity.max(constraint) }
}
