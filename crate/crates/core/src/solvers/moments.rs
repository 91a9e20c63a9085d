use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::config::NumericConfig;
use crate::distribution::{validate_for_family, DiscreteDistribution};
use crate::divergences::{check_pair, grad_second_raw};
use crate::error::{DivError, Result};
use crate::family::{DivergenceSpec, Family};
use crate::generator::GeneratorName;
use crate::kkt::{self, Constraints, WeightedObjective};

use super::{non_convergence, Multipliers, SolverReport};

/// The feasible set `ℳ = {Q : E_Q[T_k(Z)] = m_k, k = 1..K}`.
///
/// Each statistic is stored already evaluated on the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentConstraintSet {
    statistics: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl MomentConstraintSet {
    /// Requires `1 ≤ K ≤ n - 1` and the statistics together with the constant
    /// vector to be linearly independent.
    pub fn new(statistics: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let k = statistics.len();
        if k == 0 {
            return Err(DivError::InvalidConstraints("at least one statistic is required".into()));
        }
        if targets.len() != k {
            return Err(DivError::DimensionMismatch { expected: k, found: targets.len() });
        }
        let n = statistics[0].len();
        if let Some(row) = statistics.iter().find(|row| row.len() != n) {
            return Err(DivError::DimensionMismatch { expected: n, found: row.len() });
        }
        if k + 1 > n {
            return Err(DivError::InvalidConstraints(format!(
                "{k} statistics on {n} atoms: at most {} allowed",
                n.saturating_sub(1)
            )));
        }
        if statistics.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(DivError::InvalidConstraints("non-finite statistic or target".into()));
        }
        let a = DMatrix::from_fn(k + 1, n, |row, z| if row == 0 { 1.0 } else { statistics[row - 1][z] });
        let sv = a.singular_values();
        let max = sv.max();
        if sv.min() <= 1e-10 * max.max(1.0) {
            return Err(DivError::InvalidConstraints(
                "statistics and the constant vector are linearly dependent".into(),
            ));
        }
        Ok(Self { statistics, targets })
    }

    /// Statistics `T_k(z) = f_k(label_z)`.
    pub fn from_functions(labels: &[f64], functions: &[&dyn Fn(f64) -> f64], targets: Vec<f64>) -> Result<Self> {
        let stats = functions.iter().map(|f| labels.iter().map(|&z| f(z)).collect()).collect();
        Self::new(stats, targets)
    }

    /// The single constraint `E[Z] = mean` on the distribution's labels.
    pub fn mean(labels: &[f64], mean: f64) -> Result<Self> {
        Self::new(vec![labels.to_vec()], vec![mean])
    }

    pub fn statistics(&self) -> &[Vec<f64>] {
        &self.statistics
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn support_size(&self) -> usize {
        self.statistics[0].len()
    }

    pub fn residual(&self, r: &DiscreteDistribution) -> f64 {
        self.as_constraints().residual(r.mass())
    }

    fn as_constraints(&self) -> Constraints<'_> {
        Constraints { stats: &self.statistics, targets: &self.targets }
    }

    fn matrix(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.support_size();
        let k = self.statistics.len();
        let a = DMatrix::from_fn(k + 1, n, |row, z| if row == 0 { 1.0 } else { self.statistics[row - 1][z] });
        let b = DVector::from_iterator(k + 1, std::iter::once(1.0).chain(self.targets.iter().copied()));
        (a, b)
    }

    /// Minimum-norm correction of `x` onto the affine hull of `ℳ`.
    fn correct(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = self.matrix();
        let x = DVector::from_column_slice(x);
        let gram = &a * a.transpose();
        let shift = gram.lu().solve(&(&a * &x - b)).expect("constraint rows are linearly independent");
        (x - a.transpose() * shift).as_slice().to_vec()
    }

    /// A point of `ℳ` maximizing its smallest atom, via a linear program.
    fn interior_point(&self, floor: f64) -> Result<(Vec<f64>, f64)> {
        if self.statistics.len() == 1 {
            let row = &self.statistics[0];
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let m = self.targets[0];
            if !(lo < m && m < hi) {
                return Err(DivError::InfeasibleConstraints(format!(
                    "target {m} is not strictly inside the statistic range [{lo}, {hi}]"
                )));
            }
        }
        let n = self.support_size();
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let t = lp.add_var(1.0, (0.0, 1.0));
        let r: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        lp.add_constraint(r.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
        for (row, &m) in self.statistics.iter().zip(&self.targets) {
            lp.add_constraint(r.iter().zip(row).map(|(&v, &c)| (v, c)), ComparisonOp::Eq, m);
        }
        for &v in &r {
            lp.add_constraint([(v, 1.0), (t, -1.0)], ComparisonOp::Ge, 0.0);
        }
        let solution = match lp.solve() {
            Ok(outcome) => outcome
                .into_solution()
                .map_err(|_| DivError::InfeasibleConstraints("feasibility solve interrupted".into()))?,
            Err(microlp::Error::Infeasible) => {
                return Err(DivError::InfeasibleConstraints("no distribution meets the targets".into()))
            }
            Err(e) => return Err(DivError::InfeasibleConstraints(e.to_string())),
        };
        let margin = solution.var_value(t);
        if margin <= floor {
            return Err(DivError::InfeasibleConstraints(
                "the targets are met only on the boundary of the simplex".into(),
            ));
        }
        let point: Vec<f64> = r.iter().map(|&v| solution.var_value(v)).collect();
        Ok((self.correct(&point), margin))
    }
}

/// For divergences whose second-argument gradient is affine with a constant
/// Hessian (squared Euclidean and the `(x-1)²` Bregman generator), the
/// stationarity system is linear and its solution is the minimum-norm
/// correction of `P` onto the constraints. It is the minimizer whenever it
/// stays inside the simplex; otherwise no interior stationary point exists.
pub(crate) fn affine_projection(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    constraints: &MomentConstraintSet,
) -> Option<Vec<f64>> {
    let affine = match spec.family() {
        Family::Euclidean => true,
        Family::Bregman => spec.generator().and_then(|g| g.builtin_name()) == Some(GeneratorName::Square),
        _ => false,
    };
    affine.then(|| constraints.correct(p.mass()))
}

/// Minimizes `D(P‖R)` over `R ∈ ℳ` by solving
/// `δD(P‖R)/δr + Σ_k β_k T_k = C` together with the constraints.
///
/// If `P` already meets the targets it is returned with `β = 0`. Divergences
/// with a constant Hessian are solved in closed form, and fail with
/// `NonConvergence` when that solution leaves the simplex. Otherwise a
/// linear program certifies that `ℳ` reaches the simplex interior, and the
/// Newton iteration starts from the minimum-norm correction of `P` onto the
/// constraints, blended towards the certified interior point just enough to
/// keep every atom positive.
pub fn project_moments(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    constraints: &MomentConstraintSet,
    cfg: &NumericConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    check_pair(spec, p, p, cfg)?;
    if constraints.support_size() != p.support_size() {
        return Err(DivError::SupportMismatch { left: p.support_size(), right: constraints.support_size() });
    }
    let k = constraints.statistics.len();

    if constraints.residual(p) <= cfg.solver_tol {
        let grad = grad_second_raw(spec, p.mass(), p.mass());
        let st = kkt::stationarity(&grad, &[], p.mass());
        return Ok(SolverReport {
            solution: p.clone(),
            multipliers: Multipliers { c: st.c, beta: Some(vec![0.0; k]), ..Default::default() },
            stationarity_residual: st.residual,
            constraint_residual: constraints.residual(p),
            iterations: 0,
            converged: true,
        });
    }

    if let Some(r) = affine_projection(spec, p, constraints) {
        let lowest = r.iter().cloned().fold(f64::INFINITY, f64::min);
        if lowest <= 0.0 {
            return Err(DivError::NonConvergence { iterations: 0, residual: -lowest });
        }
        let solution = DiscreteDistribution::from_solver(r, p.labels().to_vec());
        let grad = grad_second_raw(spec, p.mass(), solution.mass());
        let st = kkt::stationarity(&grad, &constraints.statistics, solution.mass());
        return Ok(SolverReport {
            constraint_residual: constraints.residual(&solution),
            solution,
            multipliers: Multipliers { c: st.c, beta: Some(st.beta), ..Default::default() },
            stationarity_residual: st.residual,
            iterations: 0,
            converged: true,
        });
    }

    let (interior, margin) = constraints.interior_point(cfg.interior_floor)?;
    let corrected = constraints.correct(p.mass());
    let start = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]
        .iter()
        .map(|&s| corrected.iter().zip(&interior).map(|(c, i)| (1.0 - s) * c + s * i).collect::<Vec<f64>>())
        .find(|x| x.iter().all(|&v| v >= 0.01 * margin))
        .unwrap_or(interior);

    let objective = WeightedObjective::new(spec, vec![p.mass()], vec![1.0]);
    let out = kkt::minimize(&objective, &constraints.as_constraints(), start, cfg);
    if !out.converged {
        return Err(non_convergence(out.iterations, out.multipliers.residual, out.constraint_residual));
    }
    let solution = DiscreteDistribution::from_solver(out.point, p.labels().to_vec());
    validate_for_family(&solution, spec, cfg)?;
    Ok(SolverReport {
        solution,
        multipliers: Multipliers { c: out.multipliers.c, beta: Some(out.multipliers.beta), ..Default::default() },
        stationarity_residual: out.multipliers.residual,
        constraint_residual: out.constraint_residual,
        iterations: out.iterations,
        converged: true,
    })
}
