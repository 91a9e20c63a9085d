use crate::config::NumericConfig;
use crate::distribution::{validate_for_family, DiscreteDistribution};
use crate::divergences::value;
use crate::error::{DivError, Result};
use crate::geometry::{line_point_from, BallSpec, LinePointResult};

use super::{Multipliers, SolverReport};

// Coarse α grid used to bracket every crossing of the radius.
const SCAN_INTERVALS: usize = 16;
const ALPHA_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

struct Crossing {
    line: LinePointResult,
    gap: f64,
}

/// Projects `q` onto the ball: the minimizer of `D(Q‖R)` over `R ∈ 𝓑_κ(P)`.
///
/// A source already inside the ball (including `|D(P‖Q) - κ| ≤ solver_tol`)
/// is returned unchanged. Otherwise the minimizer is the point of the line
/// `𝓛(P:Q)` on the ball's surface, located by bisection on `α` so that
/// `D(P‖𝓛_α) = κ`. If the scan finds several crossings, the one with the
/// smallest `D(Q‖·)` is returned and all of them are listed.
pub fn project_ball(ball: &BallSpec, q: &DiscreteDistribution, cfg: &NumericConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let spec = &ball.spec;
    let center = &ball.center;
    let kappa = ball.radius;
    let membership = ball.membership(q, cfg)?;

    let stationary = |line: &LinePointResult| line.residual;
    if membership.inside {
        let line = line_point_from(spec, center, q, 1.0, None, cfg)?;
        return Ok(SolverReport {
            solution: q.clone(),
            multipliers: Multipliers { c: line.multiplier, alpha_star: Some(1.0), ..Default::default() },
            stationarity_residual: stationary(&line),
            constraint_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if kappa == 0.0 {
        let line = line_point_from(spec, center, q, 0.0, None, cfg)?;
        return Ok(SolverReport {
            solution: center.clone(),
            multipliers: Multipliers { c: line.multiplier, alpha_star: Some(0.0), ..Default::default() },
            stationarity_residual: stationary(&line),
            constraint_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let gap_of = |line: &LinePointResult| value(spec, center.mass(), line.point.mass()) - kappa;
    let mut solves = 0usize;
    let mut solve = |alpha: f64, warm: Option<&[f64]>| -> Result<(LinePointResult, f64)> {
        solves += 1;
        let line = line_point_from(spec, center, q, alpha, warm, cfg)?;
        let gap = gap_of(&line);
        Ok((line, gap))
    };

    let mut grid: Vec<(LinePointResult, f64)> = Vec::with_capacity(SCAN_INTERVALS + 1);
    for k in 0..=SCAN_INTERVALS {
        let alpha = k as f64 / SCAN_INTERVALS as f64;
        let warm = grid.last().map(|(l, _)| l.point.mass().to_vec());
        grid.push(solve(alpha, warm.as_deref())?);
    }

    let mut crossings = Vec::new();
    for k in 0..SCAN_INTERVALS {
        let (lo_line, lo_gap) = &grid[k];
        let (hi_line, hi_gap) = &grid[k + 1];
        if (*lo_gap < 0.0) == (*hi_gap < 0.0) {
            continue;
        }
        let rising = *lo_gap < 0.0;
        let (mut lo, mut hi) = (lo_line.alpha, hi_line.alpha);
        let mut best = if lo_gap.abs() < hi_gap.abs() {
            Crossing { line: lo_line.clone(), gap: *lo_gap }
        } else {
            Crossing { line: hi_line.clone(), gap: *hi_gap }
        };
        for _ in 0..MAX_BISECTIONS {
            if best.gap.abs() <= 0.1 * cfg.solver_tol || hi - lo <= ALPHA_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (line, gap) = solve(mid, Some(best.line.point.mass()))?;
            if (gap < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
            if gap.abs() <= best.gap.abs() {
                best = Crossing { line, gap };
            }
        }
        crossings.push(best);
    }

    let objective = |c: &Crossing| value(spec, q.mass(), c.line.point.mass());
    let alphas: Vec<f64> = crossings.iter().map(|c| c.line.alpha).collect();
    let best = crossings
        .into_iter()
        .min_by(|a, b| objective(a).total_cmp(&objective(b)))
        .ok_or(DivError::NonConvergence { iterations: solves, residual: f64::NAN })?;

    let constraint_residual = best.gap.abs();
    let converged = constraint_residual <= cfg.solver_tol && best.line.residual <= cfg.solver_tol;
    if !converged {
        return Err(DivError::NonConvergence {
            iterations: solves,
            residual: constraint_residual.max(best.line.residual),
        });
    }
    validate_for_family(&best.line.point, spec, cfg)?;
    Ok(SolverReport {
        solution: best.line.point,
        multipliers: Multipliers {
            c: best.line.multiplier,
            beta: None,
            alpha_star: Some(best.line.alpha),
            alpha_crossings: (alphas.len() > 1).then_some(alphas),
        },
        stationarity_residual: best.line.residual,
        constraint_residual,
        iterations: solves,
        converged,
    })
}
