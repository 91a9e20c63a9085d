use crate::config::NumericConfig;
use crate::distribution::{validate_for_family, DiscreteDistribution};
use crate::error::{DivError, Result};
use crate::family::{DivergenceSpec, Family};
use crate::generator::GeneratorSpec;
use crate::kkt::{self, Constraints, WeightedObjective};

use super::{check_weights, non_convergence, Multipliers, SolverReport};

/// Minimize `Σ_i α_i D(P_i ‖ R)` over the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidProblem {
    pub spec: DivergenceSpec,
    pub points: Vec<DiscreteDistribution>,
    pub weights: Vec<f64>,
}

impl CentroidProblem {
    pub fn new(
        spec: DivergenceSpec,
        points: Vec<DiscreteDistribution>,
        weights: Vec<f64>,
        cfg: &NumericConfig,
    ) -> Result<Self> {
        check_weights(&weights, points.len(), cfg.simplex_tol)?;
        for p in &points {
            points[0].same_support(p)?;
            validate_for_family(p, &spec, cfg)?;
        }
        Ok(Self { spec, points, weights })
    }

    /// Uniform weights over `points`.
    pub fn uniform(spec: DivergenceSpec, points: Vec<DiscreteDistribution>, cfg: &NumericConfig) -> Result<Self> {
        let w = vec![1.0 / points.len().max(1) as f64; points.len()];
        Self::new(spec, points, w, cfg)
    }

    pub fn objective(&self, r: &DiscreteDistribution) -> f64 {
        self.active_objective().value(r.mass())
    }

    fn active_objective(&self) -> WeightedObjective<'_> {
        let (anchors, weights) =
            self.points.iter().zip(&self.weights).filter(|(_, &w)| w > 0.0).map(|(p, &w)| (p.mass(), w)).unzip();
        WeightedObjective::new(&self.spec, anchors, weights)
    }
}

fn mixture(problem: &CentroidProblem) -> Vec<f64> {
    let n = problem.points[0].support_size();
    let mut m = vec![0.0; n];
    for (p, w) in problem.points.iter().zip(&problem.weights) {
        for (mz, pz) in m.iter_mut().zip(p.mass()) {
            *mz += w * pz;
        }
    }
    m
}

fn geometric_mean(problem: &CentroidProblem) -> Vec<f64> {
    let n = problem.points[0].support_size();
    let raw: Vec<f64> = (0..n)
        .map(|z| {
            problem
                .points
                .iter()
                .zip(&problem.weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(p, w)| w * p.mass()[z].ln())
                .sum::<f64>()
                .exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Solves the weighted centroid condition `Σ_i α_i δD(P_i‖R)/δr = C`.
///
/// Points with zero weight are dropped. The iteration starts from the
/// mixture `Σ α_i P_i` (the exact answer for Euclidean, KL and every Bregman
/// divergence) or, for reverse KL, from the normalized weighted geometric
/// mean (its exact answer).
pub fn centroid(problem: &CentroidProblem, cfg: &NumericConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let start = match problem.spec.family() {
        Family::ReverseKl => geometric_mean(problem),
        _ => mixture(problem),
    };
    let objective = problem.active_objective();
    let out = kkt::minimize(&objective, &Constraints::none(), start, cfg);
    if !out.converged {
        return Err(non_convergence(out.iterations, out.multipliers.residual, out.constraint_residual));
    }
    let solution = DiscreteDistribution::from_solver(out.point, problem.points[0].labels().to_vec());
    validate_for_family(&solution, &problem.spec, cfg)?;
    Ok(SolverReport {
        solution,
        multipliers: Multipliers { c: out.multipliers.c, ..Default::default() },
        stationarity_residual: out.multipliers.residual,
        constraint_residual: out.constraint_residual,
        iterations: out.iterations,
        converged: true,
    })
}

fn check_vectors(generator: &GeneratorSpec, points: &[Vec<f64>], weights: &[f64]) -> Result<usize> {
    check_weights(weights, points.len(), NumericConfig::default().simplex_tol)?;
    let d = points[0].len();
    if d == 0 {
        return Err(DivError::DimensionMismatch { expected: 1, found: 0 });
    }
    for p in points {
        if p.len() != d {
            return Err(DivError::DimensionMismatch { expected: d, found: p.len() });
        }
        if generator.needs_positive_domain() {
            if let Some((index, &value)) = p.iter().enumerate().find(|(_, &v)| v.is_nan() || v <= 0.0) {
                return Err(DivError::DomainViolation {
                    index,
                    value,
                    family: format!("bregman[{}]", generator.name()),
                });
            }
        }
    }
    Ok(d)
}

/// The minimizer of `Σ_i α_i D_B(p_i ‖ r)` over `r ∈ ℝ^d`, which for every
/// Bregman divergence is the weighted arithmetic mean `Σ_i α_i p_i`.
pub fn bregman_centroid_vector(generator: &GeneratorSpec, points: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    let d = check_vectors(generator, points, weights)?;
    let mut mean = vec![0.0; d];
    for (p, w) in points.iter().zip(weights) {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += w * x;
        }
    }
    Ok(mean)
}

/// Componentwise Bregman divergence `Σ_ν f(p_ν) - f(q_ν) - f'(q_ν)(p_ν - q_ν)`.
pub fn bregman_vector_divergence(generator: &GeneratorSpec, p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| generator.eval(a) - generator.eval(b) - generator.deriv(b) * (a - b)).sum()
}

/// Gradient in `r` of `Σ_i α_i D_B(p_i ‖ r)`.
pub fn bregman_vector_gradient(
    generator: &GeneratorSpec,
    points: &[Vec<f64>],
    weights: &[f64],
    at: &[f64],
) -> Result<Vec<f64>> {
    let d = check_vectors(generator, points, weights)?;
    if at.len() != d {
        return Err(DivError::DimensionMismatch { expected: d, found: at.len() });
    }
    let mut g = vec![0.0; d];
    for (p, w) in points.iter().zip(weights) {
        for ((gz, &pz), &rz) in g.iter_mut().zip(p).zip(at) {
            *gz -= w * generator.second_deriv(rz) * (pz - rz);
        }
    }
    Ok(g)
}
