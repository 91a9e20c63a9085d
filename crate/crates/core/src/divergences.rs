//! Divergence values and functional derivatives on a finite support.
//!
//! With counting measure the functional derivative `δD/δq(z)` becomes the
//! per-atom partial derivative `∂D/∂q_z`, taken with `q` unconstrained.
//! Gradients are returned as-is: the normalization multiplier that makes
//! stationarity conditions read `gradient = C·1` belongs to the solvers.
//!
//! | family        | D(P‖Q)                         | ∂/∂q_z               | ∂/∂p_z           |
//! |---------------|--------------------------------|----------------------|------------------|
//! | euclidean     | ½ Σ (q - p)²                   | q - p                | p - q            |
//! | kl            | Σ p ln(p/q)                    | -p/q                 | ln(p/q) + 1      |
//! | reverse_kl    | Σ q ln(q/p)                    | ln(q/p) + 1          | -q/p             |
//! | bregman f     | Σ f(p) - f(q) - f'(q)(p - q)   | -f''(q)(p - q)       | f'(p) - f'(q)    |
//! | f_divergence  | Σ q f(p/q)                     | f̃'(q/p)              | f'(p/q)          |
//! | renyi α       | ln(Σ p^α q^{1-α}) / (α - 1)    | -(p/q)^α / Σ p^α q^{1-α} | unsupported  |

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::NumericConfig;
use crate::distribution::{validate_for_family, DiscreteDistribution};
use crate::error::{DivError, Result};
use crate::family::{DivergenceSpec, Family};

/// Which argument a gradient is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Argument {
    First,
    Second,
}

/// Per-atom functional derivative of a divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    pub values: Vec<f64>,
    pub wrt: Argument,
}

// Orders above this evaluate the Rényi normalizer in log space.
const RENYI_LOG_SPACE_ALPHA: f64 = 4.0;

fn renyi_order(spec: &DivergenceSpec) -> f64 {
    spec.alpha().expect("renyi spec carries alpha")
}

/// `ln Σ p^α q^{1-α}`.
fn renyi_log_normalizer(alpha: f64, p: &[f64], q: &[f64]) -> f64 {
    if alpha > RENYI_LOG_SPACE_ALPHA {
        let terms: Vec<f64> = p.iter().zip(q).map(|(&pi, &qi)| alpha * pi.ln() + (1.0 - alpha) * qi.ln()).collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    } else {
        p.iter().zip(q).map(|(&pi, &qi)| pi.powf(alpha) * qi.powf(1.0 - alpha)).sum::<f64>().ln()
    }
}

/// `(p_z/q_z)^α / Σ p^α q^{1-α}` for every atom.
fn renyi_weights(alpha: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    let log_s = renyi_log_normalizer(alpha, p, q);
    p.iter().zip(q).map(|(&pi, &qi)| (alpha * (pi.ln() - qi.ln()) - log_s).exp()).collect()
}

/// Raw `D(p‖q)` on slices; no validation, no clamping.
pub(crate) fn value(spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
    match spec.family() {
        Family::Euclidean => 0.5 * p.iter().zip(q).map(|(a, b)| (b - a) * (b - a)).sum::<f64>(),
        Family::Kl => p.iter().zip(q).map(|(&pi, &qi)| if pi == 0.0 { 0.0 } else { pi * (pi / qi).ln() }).sum(),
        Family::ReverseKl => value(&DivergenceSpec::kl(), q, p),
        Family::Bregman => {
            let g = spec.generator().expect("bregman spec carries generator");
            p.iter().zip(q).map(|(&pi, &qi)| g.eval(pi) - g.eval(qi) - g.deriv(qi) * (pi - qi)).sum()
        }
        Family::FDivergence => {
            let g = spec.generator().expect("f-divergence spec carries generator");
            p.iter().zip(q).map(|(&pi, &qi)| qi * g.eval(pi / qi)).sum()
        }
        Family::Renyi => {
            let a = renyi_order(spec);
            renyi_log_normalizer(a, p, q) / (a - 1.0)
        }
    }
}

/// Raw `∂D(p‖q)/∂q`.
pub(crate) fn grad_second_raw(spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> Vec<f64> {
    let pairs = p.iter().copied().zip(q.iter().copied());
    match spec.family() {
        Family::Euclidean => pairs.map(|(pi, qi)| qi - pi).collect(),
        Family::Kl => pairs.map(|(pi, qi)| -pi / qi).collect(),
        Family::ReverseKl => pairs.map(|(pi, qi)| (qi / pi).ln() + 1.0).collect(),
        Family::Bregman => {
            let g = spec.generator().expect("bregman spec carries generator");
            pairs.map(|(pi, qi)| -g.second_deriv(qi) * (pi - qi)).collect()
        }
        Family::FDivergence => {
            let g = spec.generator().expect("f-divergence spec carries generator");
            pairs.map(|(pi, qi)| g.dual_deriv(qi / pi)).collect()
        }
        Family::Renyi => renyi_weights(renyi_order(spec), p, q).into_iter().map(|w| -w).collect(),
    }
}

/// Raw `∂D(p‖q)/∂p`; `None` for families without one.
pub(crate) fn grad_first_raw(spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> Option<Vec<f64>> {
    let pairs = p.iter().copied().zip(q.iter().copied());
    Some(match spec.family() {
        Family::Euclidean => pairs.map(|(pi, qi)| pi - qi).collect(),
        Family::Kl => pairs.map(|(pi, qi)| (pi / qi).ln() + 1.0).collect(),
        Family::ReverseKl => pairs.map(|(pi, qi)| -qi / pi).collect(),
        Family::Bregman => {
            let g = spec.generator()?;
            pairs.map(|(pi, qi)| g.deriv(pi) - g.deriv(qi)).collect()
        }
        Family::FDivergence => {
            let g = spec.generator()?;
            pairs.map(|(pi, qi)| g.deriv(pi / qi)).collect()
        }
        Family::Renyi => return None,
    })
}

/// Raw Hessian `∂²D(p‖q)/∂q∂q`.
pub(crate) fn hess_second_raw(spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let diag = |f: &dyn Fn(f64, f64) -> f64| {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, p.iter().zip(q).map(|(&pi, &qi)| f(pi, qi))))
    };
    match spec.family() {
        Family::Euclidean => DMatrix::identity(n, n),
        Family::Kl => diag(&|pi, qi| pi / (qi * qi)),
        Family::ReverseKl => diag(&|_, qi| 1.0 / qi),
        Family::Bregman => {
            let g = spec.generator().expect("bregman spec carries generator");
            diag(&|pi, qi| g.second_deriv(qi) - g.third_deriv(qi) * (pi - qi))
        }
        Family::FDivergence => {
            let g = spec.generator().expect("f-divergence spec carries generator");
            diag(&|pi, qi| g.dual_second_deriv(qi / pi) / pi)
        }
        Family::Renyi => {
            let a = renyi_order(spec);
            let w = renyi_weights(a, p, q);
            let mut h = DMatrix::from_fn(n, n, |j, k| (1.0 - a) * w[j] * w[k]);
            for j in 0..n {
                h[(j, j)] += a * w[j] / q[j];
            }
            h
        }
    }
}

pub(crate) fn check_pair(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cfg: &NumericConfig,
) -> Result<()> {
    p.same_support(q)?;
    validate_for_family(p, spec, cfg)?;
    validate_for_family(q, spec, cfg)
}

/// `D(P‖Q)`, clamped at 0 against rounding.
pub fn eval(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cfg: &NumericConfig,
) -> Result<f64> {
    check_pair(spec, p, q, cfg)?;
    Ok(value(spec, p.mass(), q.mass()).max(0.0))
}

/// `δD(P‖Q)/δq(z)` on every atom.
pub fn grad_second(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cfg: &NumericConfig,
) -> Result<GradientVector> {
    check_pair(spec, p, q, cfg)?;
    Ok(GradientVector { values: grad_second_raw(spec, p.mass(), q.mass()), wrt: Argument::Second })
}

/// `δD(P‖Q)/δp(z)` on every atom. Not available for Rényi.
pub fn grad_first(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cfg: &NumericConfig,
) -> Result<GradientVector> {
    if !spec.has_first_derivative() {
        return Err(DivError::UnsupportedDerivative { family: spec.label() });
    }
    check_pair(spec, p, q, cfg)?;
    let values = grad_first_raw(spec, p.mass(), q.mass())
        .ok_or_else(|| DivError::UnsupportedDerivative { family: spec.label() })?;
    Ok(GradientVector { values, wrt: Argument::First })
}

pub fn gradient(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    wrt: Argument,
    cfg: &NumericConfig,
) -> Result<GradientVector> {
    match wrt {
        Argument::First => grad_first(spec, p, q, cfg),
        Argument::Second => grad_second(spec, p, q, cfg),
    }
}

/// Largest disagreement between the analytic gradient and central
/// differences of `eval` along every pairwise mass transfer `e_i - e_j`.
///
/// The step for transfer `(i, j)` is `step · min(x_i, x_j)` (or `step` when
/// that minimum is 0), so perturbations shrink near the boundary.
pub fn fd_check_gradient(
    spec: &DivergenceSpec,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    wrt: Argument,
    step: f64,
    cfg: &NumericConfig,
) -> Result<f64> {
    let grad = gradient(spec, p, q, wrt, cfg)?.values;
    let base = match wrt {
        Argument::First => p.mass(),
        Argument::Second => q.mass(),
    };
    let n = base.len();
    let mut plus = base.to_vec();
    let mut minus = base.to_vec();
    let eval_at = |x: &[f64]| match wrt {
        Argument::First => value(spec, x, q.mass()),
        Argument::Second => value(spec, p.mass(), x),
    };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = base[i].min(base[j]);
            let h = if scale > 0.0 { step * scale } else { step };
            plus[i] += h;
            plus[j] -= h;
            minus[i] -= h;
            minus[j] += h;
            let fd = (eval_at(&plus) - eval_at(&minus)) / (2.0 * h);
            worst = worst.max((fd - (grad[i] - grad[j])).abs());
            plus[i] = base[i];
            plus[j] = base[j];
            minus[i] = base[i];
            minus[j] = base[j];
        }
    }
    Ok(worst)
}
