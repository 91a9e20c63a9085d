//! Equality-constrained minimization of weighted divergence sums.
//!
//! Every stationarity problem in the crate has the form
//!
//! ```text
//! minimize   Σ_i w_i D(A_i ‖ r)
//! subject to Σ_z r_z = 1,  Σ_z T_k(z) r_z = m_k,  r > 0
//! ```
//!
//! whose KKT conditions are `Σ_i w_i ∂D(A_i‖r)/∂r_z + Σ_k β_k T_k(z) = C`.
//! The solver is a feasible-start damped Newton method on that system:
//! iterates stay on the affine set, a fraction-to-boundary rule keeps them
//! strictly positive, and an Armijo search on the objective globalizes the
//! step. When the Newton direction is unavailable or not a descent direction
//! a projected-gradient step is taken instead, and a run that exhausts its
//! Newton budget falls back to a projected-gradient phase before a final
//! Newton polish.

use nalgebra::{DMatrix, DVector};

use crate::config::NumericConfig;
use crate::divergences::{grad_second_raw, hess_second_raw, value};
use crate::family::DivergenceSpec;

/// `Σ_i w_i D(anchor_i ‖ r)` as a function of `r`.
pub(crate) struct WeightedObjective<'a> {
    spec: &'a DivergenceSpec,
    anchors: Vec<&'a [f64]>,
    weights: Vec<f64>,
}

impl<'a> WeightedObjective<'a> {
    pub(crate) fn new(spec: &'a DivergenceSpec, anchors: Vec<&'a [f64]>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(anchors.len(), weights.len());
        Self { spec, anchors, weights }
    }

    pub(crate) fn value(&self, r: &[f64]) -> f64 {
        self.anchors.iter().zip(&self.weights).map(|(a, w)| w * value(self.spec, a, r)).sum()
    }

    pub(crate) fn gradient(&self, r: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; r.len()];
        for (a, w) in self.anchors.iter().zip(&self.weights) {
            for (gz, dz) in g.iter_mut().zip(grad_second_raw(self.spec, a, r)) {
                *gz += w * dz;
            }
        }
        g
    }

    fn hessian(&self, r: &[f64]) -> DMatrix<f64> {
        let n = r.len();
        let mut h = DMatrix::zeros(n, n);
        for (a, w) in self.anchors.iter().zip(&self.weights) {
            h += hess_second_raw(self.spec, a, r) * *w;
        }
        h
    }
}

/// Lagrange multipliers fitted to a gradient, and the leftover residual.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Stationarity {
    pub c: f64,
    pub beta: Vec<f64>,
    pub residual: f64,
}

/// Fits `grad + Σ β_k T_k ≈ C·1` by least squares weighted with `mass`.
///
/// With no statistics this makes `C` the mass-weighted mean of `grad`. The
/// residual is the sup-norm of `grad + Σ β_k T_k - C`.
pub(crate) fn stationarity(grad: &[f64], stats: &[Vec<f64>], mass: &[f64]) -> Stationarity {
    let n = grad.len();
    let k = stats.len();
    let basis = |j: usize, col: usize| if col == 0 { -1.0 } else { stats[col - 1][j] };
    let solve = |weights: &dyn Fn(usize) -> f64| {
        let normal =
            DMatrix::from_fn(k + 1, k + 1, |a, b| (0..n).map(|j| weights(j) * basis(j, a) * basis(j, b)).sum());
        let rhs = DVector::from_fn(k + 1, |a, _| -(0..n).map(|j| weights(j) * basis(j, a) * grad[j]).sum::<f64>());
        normal.lu().solve(&rhs).filter(|x| x.iter().all(|v| v.is_finite()))
    };
    let x = solve(&|j| mass[j].max(0.0)).or_else(|| solve(&|_| 1.0)).unwrap_or_else(|| DVector::zeros(k + 1));
    let residual = (0..n)
        .map(|j| (grad[j] + (0..k).map(|i| x[i + 1] * stats[i][j]).sum::<f64>() - x[0]).abs())
        .fold(0.0, f64::max);
    Stationarity { c: x[0], beta: x.iter().skip(1).copied().collect(), residual }
}

pub(crate) struct Constraints<'a> {
    pub stats: &'a [Vec<f64>],
    pub targets: &'a [f64],
}

impl Constraints<'_> {
    pub(crate) fn none() -> Constraints<'static> {
        Constraints { stats: &[], targets: &[] }
    }

    /// Rows `[1; T_1; …; T_K]`.
    fn matrix(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.stats.len() + 1, n, |row, z| if row == 0 { 1.0 } else { self.stats[row - 1][z] })
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.targets.len() + 1, std::iter::once(1.0).chain(self.targets.iter().copied()))
    }

    pub(crate) fn residual(&self, r: &[f64]) -> f64 {
        let a = self.matrix(r.len());
        (a * DVector::from_column_slice(r) - self.rhs()).amax()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub point: Vec<f64>,
    pub multipliers: Stationarity,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Newton,
    Gradient,
}

const ARMIJO: f64 = 1e-4;
const TO_BOUNDARY: f64 = 0.995;
const MAX_BACKTRACK: usize = 60;

struct Workspace<'a> {
    objective: &'a WeightedObjective<'a>,
    constraints: &'a Constraints<'a>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    // (A Aᵀ)⁻¹, for null-space projections.
    gram_inv: DMatrix<f64>,
}

impl Workspace<'_> {
    fn status(&self, r: &[f64]) -> (Stationarity, f64) {
        let st = stationarity(&self.objective.gradient(r), self.constraints.stats, r);
        (st, self.constraints.residual(r))
    }

    fn drift(&self, r: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.a * r
    }

    fn newton_direction(&self, r: &DVector<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
        let n = r.len();
        let m = self.a.nrows();
        let h = self.objective.hessian(r.as_slice());
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        kkt.view_mut((0, n), (n, m)).copy_from(&self.a.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&self.a);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-g));
        rhs.rows_mut(n, m).copy_from(&self.drift(r));
        let sol = kkt.lu().solve(&rhs)?;
        let dir = sol.rows(0, n).into_owned();
        dir.iter().all(|v| v.is_finite()).then_some(dir)
    }

    fn gradient_direction(&self, r: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
        let at = self.a.transpose();
        let projected = g - &at * (&self.gram_inv * (&self.a * g));
        -projected + &at * (&self.gram_inv * self.drift(r))
    }
}

/// Runs the solver from a strictly positive `start` that satisfies the
/// constraints (up to rounding).
pub(crate) fn minimize(
    objective: &WeightedObjective<'_>,
    constraints: &Constraints<'_>,
    start: Vec<f64>,
    cfg: &NumericConfig,
) -> Outcome {
    let n = start.len();
    let a = constraints.matrix(n);
    let gram_inv = (&a * a.transpose()).try_inverse().expect("constraint rows are linearly independent");
    let ws = Workspace { objective, constraints, b: constraints.rhs(), a, gram_inv };

    let tol = cfg.solver_tol;
    let mut r = DVector::from_vec(start);
    let mut iterations = 0;
    let schedule = [(Phase::Newton, cfg.max_iter), (Phase::Gradient, 10 * cfg.max_iter), (Phase::Newton, cfg.max_iter)];
    let (mut st, mut cres) = ws.status(r.as_slice());

    'phases: for (phase, budget) in schedule {
        for _ in 0..budget {
            if st.residual <= tol && cres <= tol {
                break 'phases;
            }
            let g = DVector::from_vec(objective.gradient(r.as_slice()));
            let mut dir = match phase {
                Phase::Newton => ws.newton_direction(&r, &g),
                Phase::Gradient => None,
            };
            // Near a root the sign of g·d is decided by rounding in the
            // constraint drift, so only an uphill direction with
            // nonpositive curvature is replaced.
            let uphill = |d: &DVector<f64>| {
                g.dot(d) >= 0.0 && cres <= tol && d.dot(&(objective.hessian(r.as_slice()) * d)) <= 0.0
            };
            if dir.as_ref().is_none_or(uphill) {
                dir = Some(ws.gradient_direction(&r, &g));
            }
            let dir = dir.expect("direction chosen above");
            let slope = g.dot(&dir);

            let mut t = 1.0f64;
            for (rz, dz) in r.iter().zip(dir.iter()) {
                if *dz < 0.0 {
                    t = t.min(TO_BOUNDARY * rz / -dz);
                }
            }
            let f0 = objective.value(r.as_slice());
            let merit0 = st.residual.max(cres);
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                let cand = &r + &dir * t;
                if cand.iter().all(|&v| v > 0.0) {
                    let f1 = objective.value(cand.as_slice());
                    let armijo = f1.is_finite() && f1 <= f0 + ARMIJO * t * slope;
                    let (cst, ccres) = ws.status(cand.as_slice());
                    if armijo || cst.residual.max(ccres) < (1.0 - ARMIJO * t) * merit0 {
                        accepted = Some((cand, cst, ccres));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((cand, cst, ccres)) => {
                    r = cand;
                    st = cst;
                    cres = ccres;
                    iterations += 1;
                }
                None => continue 'phases,
            }
        }
    }

    let converged = st.residual <= tol && cres <= tol;
    Outcome { point: r.as_slice().to_vec(), multipliers: st, constraint_residual: cres, iterations, converged }
}
