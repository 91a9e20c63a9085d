//! Inner products, orthogonal subspaces, balls and lines built from a
//! divergence.
//!
//! The divergence line `𝓛_α(P, Q)` holds the points `R` with
//! `(1-α) δD(P‖R)/δr + α δD(Q‖R)/δr = C(α)`, i.e. the two-point weighted
//! centroid. For the Euclidean distance and KL it is the mixture
//! `(1-α)P + αQ`; for reverse KL it is the normalized geometric mean
//! `p^{1-α} q^α / Σ p^{1-α} q^α`. Every other family is solved numerically.

use serde::Serialize;

use crate::config::NumericConfig;
use crate::distribution::{validate_for_family, DiscreteDistribution};
use crate::divergences::{check_pair, eval, grad_second_raw};
use crate::error::{DivError, Result};
use crate::family::{DivergenceSpec, Family};
use crate::kkt::{self, Constraints, WeightedObjective};

/// `⟨PQ‖RQ⟩ = Σ_z (q_z - r_z) δD(P‖Q)/δq(z)`.
pub fn inner_product(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    r: &DiscreteDistribution,
    cfg: &NumericConfig,
) -> Result<f64> {
    check_pair(spec, p, q, cfg)?;
    q.same_support(r)?;
    Ok(inner_product_raw(spec, p.mass(), q.mass(), r.mass()))
}

pub(crate) fn inner_product_raw(spec: &DivergenceSpec, p: &[f64], q: &[f64], r: &[f64]) -> f64 {
    grad_second_raw(spec, p, q).iter().zip(q.iter().zip(r)).map(|(g, (qz, rz))| (qz - rz) * g).sum()
}

/// Membership in the orthogonal subspace `𝓞(P:Q)`: `|⟨PQ‖RQ⟩| ≤ tol`.
pub fn is_orthogonal(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    r: &DiscreteDistribution,
    tol: f64,
    cfg: &NumericConfig,
) -> Result<bool> {
    Ok(inner_product(spec, p, q, r, cfg)?.abs() <= tol)
}

/// The divergence ball `𝓑_κ(P) = {Q : D(P‖Q) ≤ κ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub center: DiscreteDistribution,
    pub radius: f64,
    pub spec: DivergenceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallMembership {
    pub divergence: f64,
    pub inside: bool,
    pub on_boundary: bool,
}

impl BallSpec {
    pub fn new(center: DiscreteDistribution, radius: f64, spec: DivergenceSpec, cfg: &NumericConfig) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(DivError::InvalidSpec(format!("ball radius must be finite and >= 0, got {radius}")));
        }
        validate_for_family(&center, &spec, cfg)?;
        Ok(Self { center, radius, spec })
    }

    /// Inside means `D(P‖Q) ≤ κ + solver_tol`; on the boundary means
    /// `|D(P‖Q) - κ| ≤ solver_tol`.
    pub fn membership(&self, q: &DiscreteDistribution, cfg: &NumericConfig) -> Result<BallMembership> {
        let divergence = eval(&self.spec, &self.center, q, cfg)?;
        Ok(BallMembership {
            divergence,
            inside: divergence <= self.radius + cfg.solver_tol,
            on_boundary: (divergence - self.radius).abs() <= cfg.solver_tol,
        })
    }

    pub fn contains(&self, q: &DiscreteDistribution, cfg: &NumericConfig) -> Result<bool> {
        Ok(self.membership(q, cfg)?.inside)
    }

    pub fn on_boundary(&self, q: &DiscreteDistribution, cfg: &NumericConfig) -> Result<bool> {
        Ok(self.membership(q, cfg)?.on_boundary)
    }
}

/// A point of `𝓛_α(P, Q)` with its multiplier `C(α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePointResult {
    pub point: DiscreteDistribution,
    pub alpha: f64,
    pub multiplier: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn line_stationarity(spec: &DivergenceSpec, p: &[f64], q: &[f64], alpha: f64, r: &[f64]) -> kkt::Stationarity {
    let objective = WeightedObjective::new(spec, vec![p, q], vec![1.0 - alpha, alpha]);
    kkt::stationarity(&objective.gradient(r), &[], r)
}

fn closed_form(spec: &DivergenceSpec, p: &[f64], q: &[f64], alpha: f64) -> Option<Vec<f64>> {
    match spec.family() {
        Family::Euclidean | Family::Kl => Some(p.iter().zip(q).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect()),
        Family::ReverseKl => {
            let raw: Vec<f64> = p.iter().zip(q).map(|(a, b)| a.powf(1.0 - alpha) * b.powf(alpha)).collect();
            let total: f64 = raw.iter().sum();
            Some(raw.into_iter().map(|x| x / total).collect())
        }
        _ => None,
    }
}

/// Solves for the point of the divergence line at position `alpha ∈ [0, 1]`.
///
/// The endpoints return `P` and `Q` themselves. The multiplier is the
/// mass-weighted mean of `(1-α) δD(P‖R)/δr + α δD(Q‖R)/δr` and the residual is
/// the sup-norm deviation from it.
pub fn line_point(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    alpha: f64,
    cfg: &NumericConfig,
) -> Result<LinePointResult> {
    line_point_from(spec, p, q, alpha, None, cfg)
}

pub(crate) fn line_point_from(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    alpha: f64,
    warm_start: Option<&[f64]>,
    cfg: &NumericConfig,
) -> Result<LinePointResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DivError::InvalidSpec(format!("line position must lie in [0, 1], got {alpha}")));
    }
    check_pair(spec, p, q, cfg)?;
    let (pm, qm) = (p.mass(), q.mass());

    let finish = |mass: Vec<f64>, iterations: usize| {
        let st = line_stationarity(spec, pm, qm, alpha, &mass);
        LinePointResult {
            point: DiscreteDistribution::from_solver(mass, p.labels().to_vec()),
            alpha,
            multiplier: st.c,
            residual: st.residual,
            iterations,
        }
    };

    if alpha == 0.0 {
        return Ok(finish(pm.to_vec(), 0));
    }
    if alpha == 1.0 {
        return Ok(finish(qm.to_vec(), 0));
    }
    if let Some(mass) = closed_form(spec, pm, qm, alpha) {
        return Ok(finish(mass, 0));
    }

    let objective = WeightedObjective::new(spec, vec![pm, qm], vec![1.0 - alpha, alpha]);
    let start = match warm_start {
        Some(s) => s.to_vec(),
        None => pm.iter().zip(qm).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect(),
    };
    let out = kkt::minimize(&objective, &Constraints::none(), start, cfg);
    if !out.converged {
        return Err(DivError::NonConvergence {
            iterations: out.iterations,
            residual: out.multipliers.residual.max(out.constraint_residual),
        });
    }
    let result = finish(out.point, out.iterations);
    validate_for_family(&result.point, spec, cfg)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::make_distribution;
    use crate::generator::GeneratorName;
    use approx::assert_abs_diff_eq;

    fn cfg() -> NumericConfig {
        NumericConfig::default()
    }

    fn d(w: &[f64]) -> DiscreteDistribution {
        make_distribution(w, None, &cfg()).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let e = DivergenceSpec::euclidean();
        let (p, q) = (d(&[0.5, 0.5]), d(&[0.3, 0.7]));
        assert_eq!(inner_product(&e, &p, &q, &q, &cfg()).unwrap(), 0.0);
        assert_abs_diff_eq!(inner_product(&e, &p, &q, &p, &cfg()).unwrap(), 0.08, epsilon = 1e-15);

        let kl = DivergenceSpec::kl();
        let v = inner_product(&kl, &d(&[0.5, 0.5]), &d(&[0.25, 0.75]), &d(&[0.5, 0.5]), &cfg()).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn orthogonality_examples() {
        let e = DivergenceSpec::euclidean();
        let (p, q) = (d(&[0.5, 0.5]), d(&[0.3, 0.7]));
        assert!(is_orthogonal(&e, &p, &q, &q, 1e-12, &cfg()).unwrap());
        let r = d(&[0.1, 0.9]);
        assert_abs_diff_eq!(inner_product(&e, &p, &q, &r, &cfg()).unwrap(), -0.08, epsilon = 1e-15);
        assert!(!is_orthogonal(&e, &p, &q, &r, 1e-7, &cfg()).unwrap());

        let (p, q, r) = (d(&[0.6, 0.4]), d(&[0.5, 0.5]), d(&[0.4, 0.6]));
        assert_abs_diff_eq!(inner_product(&e, &p, &q, &r, &cfg()).unwrap(), -0.02, epsilon = 1e-15);
        assert!(!is_orthogonal(&e, &p, &q, &r, 1e-7, &cfg()).unwrap());
        assert!(is_orthogonal(&e, &p, &q, &q, 1e-7, &cfg()).unwrap());
    }

    #[test]
    fn ball_examples() {
        let e = DivergenceSpec::euclidean();
        let center = d(&[0.5, 0.5]);
        let zero = BallSpec::new(center.clone(), 0.0, e.clone(), &cfg()).unwrap();
        assert!(zero.contains(&center, &cfg()).unwrap());

        let ball = BallSpec::new(center.clone(), 0.04, e.clone(), &cfg()).unwrap();
        let m = ball.membership(&d(&[0.3, 0.7]), &cfg()).unwrap();
        assert!(m.inside && m.on_boundary);

        let small = BallSpec::new(center, 0.01, e, &cfg()).unwrap();
        assert!(!small.contains(&d(&[0.3, 0.7]), &cfg()).unwrap());
        assert!(BallSpec::new(d(&[0.5, 0.5]), -1.0, DivergenceSpec::kl(), &cfg()).is_err());
    }

    #[test]
    fn line_closed_forms() {
        let (p, q) = (d(&[0.5, 0.5]), d(&[0.25, 0.75]));
        let kl = line_point(&DivergenceSpec::kl(), &p, &q, 0.5, &cfg()).unwrap();
        assert_eq!(kl.point.mass(), &[0.375, 0.625]);
        assert!(kl.residual < 1e-14);

        let rkl = line_point(&DivergenceSpec::reverse_kl(), &p, &q, 0.5, &cfg()).unwrap();
        assert_abs_diff_eq!(rkl.point.mass()[0], 0.366_025_403_784_438_6, epsilon = 1e-15);
        assert_abs_diff_eq!(rkl.point.mass()[1], 0.633_974_596_215_561_4, epsilon = 1e-15);
        assert!(rkl.residual < 1e-14);
    }

    #[test]
    fn line_endpoints_are_exact() {
        let (p, q) = (d(&[0.2, 0.3, 0.5]), d(&[0.6, 0.1, 0.3]));
        let spec = DivergenceSpec::f_divergence(GeneratorName::SquaredHellinger).unwrap();
        assert_eq!(line_point(&spec, &p, &q, 0.0, &cfg()).unwrap().point, p);
        assert_eq!(line_point(&spec, &p, &q, 1.0, &cfg()).unwrap().point, q);
        assert!(line_point(&spec, &p, &q, 1.5, &cfg()).is_err());
    }

    #[test]
    fn numeric_line_is_stationary() {
        let (p, q) = (d(&[0.2, 0.3, 0.5]), d(&[0.6, 0.1, 0.3]));
        for spec in [
            DivergenceSpec::f_divergence(GeneratorName::SquaredHellinger).unwrap(),
            DivergenceSpec::renyi(2.0).unwrap(),
            DivergenceSpec::renyi(0.5).unwrap(),
        ] {
            let res = line_point(&spec, &p, &q, 0.3, &cfg()).unwrap();
            assert!(res.residual <= 1e-10, "{spec}: {}", res.residual);
        }
    }
}
