//! Divergence geometry on finite probability simplices.
//!
//! The crate evaluates a family of differentiable, strictly convex
//! divergences between discrete distributions, exposes the geometric objects
//! they induce (inner products, orthogonality, balls and the line through two
//! points), solves the weighted centroid, ball projection and moment
//! projection problems, and checks the resulting inequalities numerically.

pub mod cli;
pub mod config;
pub mod distribution;
pub mod divergences;
pub mod error;
pub mod family;
pub mod generator;
pub mod geometry;
mod kkt;
pub mod solvers;
pub mod verify;

pub use config::NumericConfig;
pub use distribution::{make_distribution, validate_for_family, DiscreteDistribution};
pub use divergences::{eval, fd_check_gradient, grad_first, grad_second, gradient, Argument, GradientVector};
pub use error::{DivError, Result};
pub use family::{DivergenceSpec, Family};
pub use generator::{GeneratorName, GeneratorSpec};
pub use geometry::{inner_product, is_orthogonal, line_point, BallMembership, BallSpec, LinePointResult};
pub use solvers::{
    bregman_centroid_vector, centroid, project_ball, project_moments, CentroidProblem, MomentConstraintSet,
    Multipliers, SolverReport,
};
