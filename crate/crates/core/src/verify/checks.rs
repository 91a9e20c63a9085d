use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::NumericConfig;
use crate::distribution::DiscreteDistribution;
use crate::divergences::{fd_check_gradient, grad_second_raw, value, Argument};
use crate::error::DivError;
use crate::family::{DivergenceSpec, Family};
use crate::geometry::{inner_product_raw, line_point, BallSpec};
use crate::solvers::{
    affine_projection, centroid, project_ball, project_moments, CentroidProblem, MomentConstraintSet,
};

use super::oracle::brute_force_minimize;
use super::sampling::InteriorSampler;
use super::CheckReport;

const GRADIENT_TOL: f64 = 1e-5;
const THREE_POINT_TOL: f64 = 1e-10;
const EQUALITY_TOL: f64 = 1e-12;
const STRICT_SEPARATION: f64 = 1e-4;
const SELF_SEPARATION: f64 = 1e-6;
const LINE_IDENTITY_TOL: f64 = 1e-8;
const ORTHOGONAL_TOL: f64 = 1e-7;
const MINIMIZER_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-10;
const FEASIBLE_SAMPLES: usize = 100;
const PERTURBATIONS: usize = 50;
const MIN_PERTURBATION: f64 = 1e-3;
const CENTROID_GRID: usize = 400;
const BALL_GRID: usize = 200;
const LINE_SCAN: usize = 2000;
const TANGENT_GRID: usize = 20_000;
const TANGENT_RADIUS: f64 = 1e-3;

/// Which constrained minimization [`check_minimizer_inequality`] exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Ball,
    Moments,
    Orthogonal,
}

impl SetKind {
    pub const ALL: [SetKind; 3] = [SetKind::Ball, SetKind::Moments, SetKind::Orthogonal];

    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::Ball => "ball",
            SetKind::Moments => "moments",
            SetKind::Orthogonal => "orthogonal",
        }
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SetKind {
    type Err = DivError;

    fn from_str(s: &str) -> Result<Self, DivError> {
        SetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| DivError::InvalidSpec(format!("unknown constraint set `{s}`")))
    }
}

/// Accumulates per-trial slacks into a report.
struct Tracker {
    report: CheckReport,
    recorded: bool,
}

impl Tracker {
    fn new(name: &str, spec: &DivergenceSpec, trials: usize, seed: u64) -> Self {
        Self {
            report: CheckReport {
                name: name.to_string(),
                family: spec.label(),
                trials,
                worst_slack: f64::INFINITY,
                failures: 0,
                seed,
                counterexample: None,
            },
            recorded: false,
        }
    }

    fn record(&mut self, slack: f64, ok: bool, instance: impl FnOnce() -> Value) {
        self.recorded = true;
        if slack.is_nan() || slack < self.report.worst_slack {
            self.report.worst_slack = slack;
        }
        if !ok || slack.is_nan() {
            self.fail(instance());
        }
    }

    fn error(&mut self, err: &DivError, instance: impl FnOnce() -> Value) {
        let mut payload = instance();
        payload["error"] = Value::String(err.to_string());
        self.fail(payload);
    }

    fn fail(&mut self, payload: Value) {
        self.report.failures += 1;
        if self.report.counterexample.is_none() {
            self.report.counterexample = Some(payload);
        }
    }

    fn finish(mut self) -> CheckReport {
        if !self.recorded || self.report.worst_slack.is_infinite() {
            self.report.worst_slack = 0.0;
        }
        self.report
    }
}

/// Combines several requirements of one trial into a single slack.
struct Trial {
    slack: f64,
    ok: bool,
}

impl Trial {
    fn new() -> Self {
        Self { slack: f64::INFINITY, ok: true }
    }

    fn require(&mut self, slack: f64, ok: bool) {
        self.slack = self.slack.min(slack);
        self.ok &= ok && !slack.is_nan();
    }

    fn at_least(&mut self, slack: f64) {
        self.require(slack, slack >= 0.0);
    }
}

fn stream_of(name: &str) -> u64 {
    // FNV-1a, so every check draws from its own reproducible stream.
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

fn sampler(name: &str, seed: u64, cfg: &NumericConfig) -> InteriorSampler {
    InteriorSampler::new(seed, stream_of(name), cfg)
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Removes from `w` its components along `rows` (modified Gram-Schmidt).
fn project_out(rows: &[&[f64]], w: &[f64]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let mut u = row.to_vec();
        for b in &basis {
            let d: f64 = u.iter().zip(b).map(|(x, y)| x * y).sum();
            u.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            basis.push(u.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut v = w.to_vec();
    for _ in 0..2 {
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
    v
}

/// Largest `t ≥ 0` keeping `base + t·v` nonnegative.
fn max_step(base: &[f64], v: &[f64]) -> f64 {
    base.iter().zip(v).filter(|(_, &d)| d < 0.0).map(|(&b, &d)| b / -d).fold(f64::INFINITY, f64::min)
}

fn step_along(base: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    base.iter().zip(v).map(|(b, d)| b + t * d).collect()
}

/// A random point `base + t·v` with `v` orthogonal to `ones` and `rows`,
/// kept strictly inside the simplex.
fn feasible_point(s: &mut InteriorSampler, base: &[f64], rows: &[&[f64]]) -> Option<Vec<f64>> {
    let ones = vec![1.0; base.len()];
    let mut all: Vec<&[f64]> = vec![&ones];
    all.extend_from_slice(rows);
    let v = project_out(&all, &s.direction(base.len()));
    let norm = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if norm <= 1e-12 {
        return None;
    }
    let t = 0.9 * s.uniform(0.0, 1.0) * max_step(base, &v);
    Some(step_along(base, &v, t))
}

/// Scans `f(base + t·v)` over the positive part of the line and returns the
/// best `t`, its value and the grid spacing.
fn scan_line(f: impl Fn(&[f64]) -> f64, base: &[f64], v: &[f64], floor: f64) -> (f64, f64, f64) {
    let shrunk: Vec<f64> = base.iter().map(|b| b - floor).collect();
    let hi = max_step(&shrunk, v);
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    let lo = -max_step(&shrunk, &neg);
    let h = (hi - lo) / LINE_SCAN as f64;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=LINE_SCAN {
        let t = lo + k as f64 * h;
        let val = f(&step_along(base, v, t));
        if val < best.1 {
            best = (t, val);
        }
    }
    (best.0, best.1, h)
}

const SIZES: [usize; 4] = [2, 3, 5, 10];

/// Central-difference check of both gradients on random interior pairs with
/// supports of 2, 3, 5 and 10 atoms. Slack is `1e-5 - error`.
pub fn check_gradient(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let mut tracker = Tracker::new("gradient", spec, trials, seed);
    let mut s = sampler("gradient", seed, cfg);
    let sides: &[Argument] =
        if spec.has_first_derivative() { &[Argument::Second, Argument::First] } else { &[Argument::Second] };
    for t in 0..trials {
        let n = SIZES[t % SIZES.len()];
        let (p, q) = (s.interior(n), s.interior(n));
        for &wrt in sides {
            let instance = || json!({"p": p.mass(), "q": q.mass(), "wrt": wrt});
            match fd_check_gradient(spec, &p, &q, wrt, cfg.grad_fd_step, cfg) {
                Ok(err) => tracker.record(GRADIENT_TOL - err, err < GRADIENT_TOL, instance),
                Err(e) => tracker.error(&e, instance),
            }
        }
    }
    tracker.finish()
}

/// `D(P‖R) - D(P‖Q) + ⟨PQ‖RQ⟩ ≥ 0`, strictly when `Q` and `R` differ by more
/// than `1e-4`, and zero (within `1e-12`) when `R = Q`.
pub fn check_three_point(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let mut tracker = Tracker::new("three_point", spec, trials, seed);
    let mut s = sampler("three_point", seed, cfg);
    let slack =
        |p: &[f64], q: &[f64], r: &[f64]| value(spec, p, r) - value(spec, p, q) + inner_product_raw(spec, p, q, r);
    for t in 0..trials {
        let n = SIZES[t % 3];
        let (p, q, r) = (s.interior(n), s.interior(n), s.interior(n));
        let (pm, qm, rm) = (p.mass(), q.mass(), r.mass());
        let mut trial = Trial::new();
        let equal = slack(pm, qm, qm);
        trial.require(EQUALITY_TOL - equal.abs(), equal.abs() <= EQUALITY_TOL);
        let sl = slack(pm, qm, rm);
        let strict = sup_dist(qm, rm) > STRICT_SEPARATION;
        trial.require(sl, sl >= -THREE_POINT_TOL && (!strict || sl > 0.0));
        tracker.record(
            trial.slack,
            trial.ok,
            || json!({"p": pm, "q": qm, "r": rm, "slack": sl, "equality_slack": equal}),
        );
    }
    tracker.finish()
}

/// Positive second differences of `λ ↦ D(P‖Q + λ(R - Q))` on an 11-point
/// grid over `[0, 1]`, for `Q ≠ R`.
pub fn check_convexity_on_segment(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let mut tracker = Tracker::new("convexity_on_segment", spec, trials, seed);
    let mut s = sampler("convexity_on_segment", seed, cfg);
    for t in 0..trials {
        let n = SIZES[t % 3];
        let p = s.interior(n);
        let q = s.interior(n);
        let mut r = s.interior(n);
        while sup_dist(q.mass(), r.mass()) <= STRICT_SEPARATION {
            r = s.interior(n);
        }
        let (pm, qm, rm) = (p.mass(), q.mass(), r.mass());
        let values: Vec<f64> = (0..=10)
            .map(|k| {
                let lambda = k as f64 / 10.0;
                let x: Vec<f64> = qm.iter().zip(rm).map(|(a, b)| a + lambda * (b - a)).collect();
                value(spec, pm, &x)
            })
            .collect();
        let (k, d2) = (1..10)
            .map(|k| (k, values[k - 1] - 2.0 * values[k] + values[k + 1]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nine interior grid points");
        tracker.record(d2, d2 > 0.0, || json!({"p": pm, "q": qm, "r": rm, "lambda": k as f64 / 10.0}));
    }
    tracker.finish()
}

/// `⟨PQ‖PQ⟩ > D(P‖Q)` whenever `P` and `Q` differ by more than `1e-6`.
pub fn check_self_inner_product(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let mut tracker = Tracker::new("self_inner_product", spec, trials, seed);
    let mut s = sampler("self_inner_product", seed, cfg);
    for t in 0..trials {
        let n = SIZES[t % 3];
        let (p, q) = (s.interior(n), s.interior(n));
        let (pm, qm) = (p.mass(), q.mass());
        let sl = inner_product_raw(spec, pm, qm, pm) - value(spec, pm, qm);
        let ok = sup_dist(pm, qm) <= SELF_SEPARATION || sl > 0.0;
        tracker.record(sl, ok, || json!({"p": pm, "q": qm}));
    }
    tracker.finish()
}

/// For `R = 𝓛_α(P, Q)`: `(1-α)⟨PR‖SR⟩ + α⟨QR‖SR⟩ = 0` within `1e-8`, and
/// membership of `S` in `𝓞(P:R)` and in `𝓞(Q:R)` agree, both for random `S`
/// and for `S` built inside `𝓞(P:R)`.
pub fn check_line_identity(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let mut tracker = Tracker::new("line_identity", spec, trials, seed);
    let mut s = sampler("line_identity", seed, cfg);
    for t in 0..trials {
        let n = [3, 5][t % 2];
        let (p, q) = (s.interior(n), s.interior(n));
        let alpha = s.uniform(0.05, 0.95);
        let instance = || json!({"p": p.mass(), "q": q.mass(), "alpha": alpha});
        let line = match line_point(spec, &p, &q, alpha, cfg) {
            Ok(l) => l,
            Err(e) => {
                tracker.error(&e, instance);
                continue;
            }
        };
        let (pm, qm, rm) = (p.mass(), q.mass(), line.point.mass());
        let mut trial = Trial::new();
        let random = s.interior(n);
        let combo = (1.0 - alpha) * inner_product_raw(spec, pm, rm, random.mass())
            + alpha * inner_product_raw(spec, qm, rm, random.mass());
        trial.at_least(LINE_IDENTITY_TOL - combo.abs());

        let gp = grad_second_raw(spec, pm, rm);
        let mut candidates = vec![random.mass().to_vec()];
        candidates.extend(feasible_point(&mut s, rm, &[&gp]));
        for cand in &candidates {
            let on_p = inner_product_raw(spec, pm, rm, cand).abs() <= ORTHOGONAL_TOL;
            let on_q = inner_product_raw(spec, qm, rm, cand).abs() <= ORTHOGONAL_TOL;
            trial.require(0.0, on_p == on_q);
        }
        tracker.record(trial.slack, trial.ok, instance);
    }
    tracker.finish()
}

fn random_ball_point(s: &mut InteriorSampler, spec: &DivergenceSpec, center: &[f64], kappa: f64) -> Vec<f64> {
    let target = s.interior(center.len());
    let mut t = 1.0;
    loop {
        let r: Vec<f64> = center.iter().zip(target.mass()).map(|(c, x)| c + t * (x - c)).collect();
        if value(spec, center, &r) <= kappa || t < 1e-12 {
            return r;
        }
        t *= 0.5;
    }
}

fn minimizer_ball(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let name = "minimizer_inequality[ball]";
    let mut tracker = Tracker::new(name, spec, trials, seed);
    let mut s = sampler(name, seed, cfg);
    for t in 0..trials {
        let n = SIZES[t % 3];
        let (center, q) = (s.interior(n), s.interior(n));
        let full = value(spec, center.mass(), q.mass());
        let inside = t % 10 == 0;
        let kappa = if inside { 1.5 * full } else { s.uniform(0.15, 0.85) * full };
        let instance = || json!({"center": center.mass(), "q": q.mass(), "kappa": kappa});
        let result = BallSpec::new(center.clone(), kappa, spec.clone(), cfg).and_then(|b| project_ball(&b, &q, cfg));
        let report = match result {
            Ok(r) => r,
            Err(e) => {
                tracker.error(&e, instance);
                continue;
            }
        };
        let (cm, qm, star) = (center.mass(), q.mass(), report.solution.mass());
        let mut trial = Trial::new();
        if inside {
            trial.require(0.0, star == qm);
        } else {
            let gap = (value(spec, cm, star) - kappa).abs();
            trial.at_least(cfg.solver_tol - gap);
        }
        for _ in 0..FEASIBLE_SAMPLES {
            let r = random_ball_point(&mut s, spec, cm, kappa);
            trial.at_least(MINIMIZER_TOL - inner_product_raw(spec, qm, star, &r));
        }
        if n <= 3 {
            let oracle = brute_force_minimize(
                |r| if value(spec, cm, r) <= kappa { value(spec, qm, r) } else { f64::NAN },
                n,
                BALL_GRID,
                cfg,
            );
            match oracle {
                Ok((_, best)) => trial.at_least(best + ORACLE_TOL - value(spec, qm, star)),
                Err(_) => trial.require(0.0, false),
            }
        }
        tracker.record(trial.slack, trial.ok, instance);
    }
    tracker.finish()
}

fn minimizer_moments(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let name = "minimizer_inequality[moments]";
    let mut tracker = Tracker::new(name, spec, trials, seed);
    let mut s = sampler(name, seed, cfg);
    for t in 0..trials {
        let n = [3, 4, 5][t % 3];
        let labels: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut stats = vec![labels.clone()];
        if n >= 4 && t % 2 == 0 {
            stats.push(labels.iter().map(|z| z * z).collect());
        }
        let satisfied = t % 10 == 0;
        // Constant-Hessian divergences only have an interior minimizer when
        // the affine correction of P stays in the simplex, so instances
        // without one are redrawn.
        let (p, targets, constraints) = loop {
            let p = s.interior(n);
            let source = if satisfied { p.clone() } else { s.interior(n) };
            let targets: Vec<f64> = stats.iter().map(|row| source.expectation(row)).collect();
            let constraints = MomentConstraintSet::new(stats.clone(), targets.clone());
            let outside = constraints
                .as_ref()
                .ok()
                .and_then(|c| affine_projection(spec, &p, c))
                .is_some_and(|r| r.iter().any(|&x| x <= cfg.interior_floor));
            if !outside {
                break (p, targets, constraints);
            }
        };
        let instance = || json!({"p": p.mass(), "statistics": stats, "targets": targets});
        let result = constraints.and_then(|c| project_moments(spec, &p, &c, cfg));
        let report = match result {
            Ok(r) => r,
            Err(e) => {
                tracker.error(&e, instance);
                continue;
            }
        };
        let (pm, star) = (p.mass(), report.solution.mass());
        let rows: Vec<&[f64]> = stats.iter().map(|r| r.as_slice()).collect();
        let mut trial = Trial::new();
        if satisfied {
            let zero_beta = report.multipliers.beta.as_ref().is_some_and(|b| b.iter().all(|&x| x == 0.0));
            trial.require(0.0, star == pm && zero_beta);
        }
        for _ in 0..FEASIBLE_SAMPLES {
            if let Some(r) = feasible_point(&mut s, star, &rows) {
                trial.at_least(MINIMIZER_TOL - inner_product_raw(spec, pm, star, &r));
            }
        }
        if n == 3 && !satisfied {
            let ones = vec![1.0; n];
            let v = project_out(&[&ones, &stats[0]], &[1.0, 0.0, 0.0]);
            let (_, best, _) = scan_line(|r| value(spec, pm, r), star, &v, cfg.interior_floor);
            trial.at_least(best + ORACLE_TOL - value(spec, pm, star));
        }
        tracker.record(trial.slack, trial.ok, instance);
    }
    tracker.finish()
}

fn minimizer_orthogonal(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let name = "minimizer_inequality[orthogonal]";
    let mut tracker = Tracker::new(name, spec, trials, seed);
    let mut s = sampler(name, seed, cfg);
    for t in 0..trials {
        let n = [3, 4, 5][t % 3];
        let (p, q) = (s.interior(n), s.interior(n));
        let (pm, qm) = (p.mass(), q.mass());
        let g = grad_second_raw(spec, pm, qm);
        let base = value(spec, pm, qm);
        let mut trial = Trial::new();
        for _ in 0..FEASIBLE_SAMPLES {
            if let Some(r) = feasible_point(&mut s, qm, &[&g]) {
                trial.at_least(MINIMIZER_TOL - inner_product_raw(spec, pm, qm, &r).abs());
                trial.at_least(value(spec, pm, &r) - base + ORACLE_TOL);
            }
        }
        if n == 3 {
            let ones = vec![1.0; n];
            let v = project_out(&[&ones, &g], &[1.0, 0.0, 0.0]);
            let (t_best, best, h) = scan_line(|r| value(spec, pm, r), qm, &v, cfg.interior_floor);
            trial.at_least(best - base + ORACLE_TOL);
            trial.at_least(h - t_best.abs());
        }
        tracker.record(trial.slack, trial.ok, || json!({"p": pm, "q": qm}));
    }
    tracker.finish()
}

/// The minimizer of each constrained problem satisfies
/// `⟨S P_*‖R P_*⟩ ≤ 1e-8` for 100 random feasible `R`, where `S` is the
/// divergence's fixed argument, and is not beaten by an exhaustive search of
/// the feasible set on supports of at most three atoms.
pub fn check_minimizer_inequality(
    spec: &DivergenceSpec,
    kind: SetKind,
    trials: usize,
    seed: u64,
    cfg: &NumericConfig,
) -> CheckReport {
    match kind {
        SetKind::Ball => minimizer_ball(spec, trials, seed, cfg),
        SetKind::Moments => minimizer_moments(spec, trials, seed, cfg),
        SetKind::Orthogonal => minimizer_orthogonal(spec, trials, seed, cfg),
    }
}

/// Weighted centroids on three atoms agree with a 400-step lattice search
/// within `2/400`, never do worse than the lattice optimum, strictly beat 50
/// random perturbations of size at least `1e-3`, satisfy the weighted
/// inner-product condition, and for KL equal the mixture within `1e-10`.
pub fn check_centroid_optimality(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let mut tracker = Tracker::new("centroid_optimality", spec, trials, seed);
    let mut s = sampler("centroid_optimality", seed, cfg);
    let n = 3;
    for t in 0..trials {
        let count = 2 + t % 3;
        let points: Vec<DiscreteDistribution> = (0..count).map(|_| s.interior(n)).collect();
        let weights = s.weights(count);
        let instance = || {
            json!({
                "points": points.iter().map(|p| p.mass().to_vec()).collect::<Vec<_>>(),
                "weights": weights,
            })
        };
        let result = CentroidProblem::new(spec.clone(), points.clone(), weights.clone(), cfg)
            .and_then(|prob| centroid(&prob, cfg));
        let report = match result {
            Ok(r) => r,
            Err(e) => {
                tracker.error(&e, instance);
                continue;
            }
        };
        let star = report.solution.mass();
        let objective =
            |r: &[f64]| -> f64 { points.iter().zip(&weights).map(|(p, w)| w * value(spec, p.mass(), r)).sum() };
        let at_star = objective(star);
        let mut trial = Trial::new();

        match brute_force_minimize(objective, n, CENTROID_GRID, cfg) {
            Ok((arg, best)) => {
                trial.at_least(2.0 / CENTROID_GRID as f64 - sup_dist(arg.mass(), star));
                trial.at_least(best + EQUALITY_TOL - at_star);
            }
            Err(_) => trial.require(0.0, false),
        }

        if spec.family() == Family::Kl {
            let mixture: Vec<f64> =
                (0..n).map(|z| points.iter().zip(&weights).map(|(p, w)| w * p.mass()[z]).sum()).collect();
            trial.at_least(1e-10 - sup_dist(&mixture, star));
        }

        let ones = vec![1.0; n];
        for _ in 0..PERTURBATIONS {
            let v = project_out(&[&ones], &s.direction(n));
            let norm = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let reach = max_step(star, &v) * norm;
            if reach <= 2.0 * MIN_PERTURBATION {
                continue;
            }
            let size = s.uniform(MIN_PERTURBATION, reach.min(0.1) * 0.9);
            let r = step_along(star, &v, size / norm);
            let gain = objective(&r) - at_star;
            trial.require(gain, gain > 0.0);
        }

        for _ in 0..FEASIBLE_SAMPLES {
            let r = s.interior(n);
            let combined: f64 =
                points.iter().zip(&weights).map(|(p, w)| w * inner_product_raw(spec, p.mass(), star, r.mass())).sum();
            trial.at_least(MINIMIZER_TOL - combined);
        }
        tracker.record(trial.slack, trial.ok, instance);
    }
    tracker.finish()
}

/// For `P_* = 𝓛_α(P, Q)` on two atoms, every lattice point inside both
/// `𝓑_{D(P‖P_*)}(P)` and `𝓑_{D(Q‖P_*)}(Q)` lies within `1e-3` of `P_*`.
pub fn check_tangent_balls(spec: &DivergenceSpec, trials: usize, seed: u64, cfg: &NumericConfig) -> CheckReport {
    let mut tracker = Tracker::new("tangent_balls", spec, trials, seed);
    let mut s = sampler("tangent_balls", seed, cfg);
    for _ in 0..trials {
        let p = s.interior(2);
        let mut q = s.interior(2);
        while sup_dist(p.mass(), q.mass()) <= 0.05 {
            q = s.interior(2);
        }
        let alpha = s.uniform(0.1, 0.9);
        let instance = || json!({"p": p.mass(), "q": q.mass(), "alpha": alpha});
        let line = match line_point(spec, &p, &q, alpha, cfg) {
            Ok(l) => l,
            Err(e) => {
                tracker.error(&e, instance);
                continue;
            }
        };
        let (pm, qm, star) = (p.mass(), q.mass(), line.point.mass());
        let k1 = value(spec, pm, star);
        let k2 = value(spec, qm, star);
        let floor = cfg.interior_floor;
        let mut farthest = 0.0f64;
        for k in 0..=TANGENT_GRID {
            let x = floor + (1.0 - 2.0 * floor) * k as f64 / TANGENT_GRID as f64;
            let r = [x, 1.0 - x];
            if value(spec, pm, &r) <= k1 + cfg.solver_tol && value(spec, qm, &r) <= k2 + cfg.solver_tol {
                farthest = farthest.max(sup_dist(&r, star));
            }
        }
        let slack = TANGENT_RADIUS - farthest;
        tracker.record(slack, slack >= 0.0, instance);
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::GeneratorName;

    fn cfg() -> NumericConfig {
        NumericConfig::default()
    }

    #[test]
    fn euclidean_segment_second_difference_is_constant() {
        let spec = DivergenceSpec::euclidean();
        let (p, q, r) = ([0.2, 0.3, 0.5], [0.1, 0.6, 0.3], [0.5, 0.25, 0.25]);
        let f = |l: f64| {
            let x: Vec<f64> = q.iter().zip(&r).map(|(a, b)| a + l * (b - a)).collect();
            value(&spec, &p, &x)
        };
        let expected: f64 = q.iter().zip(&r).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() * 0.01;
        for k in 1..10 {
            let l = k as f64 / 10.0;
            let d2 = f(l - 0.1) - 2.0 * f(l) + f(l + 0.1);
            assert!((d2 - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn euclidean_three_point_slack_is_divergence_between_q_and_r() {
        let spec = DivergenceSpec::euclidean();
        let (p, q, r) = ([0.2, 0.3, 0.5], [0.1, 0.6, 0.3], [0.5, 0.25, 0.25]);
        let slack = value(&spec, &p, &r) - value(&spec, &p, &q) + inner_product_raw(&spec, &p, &q, &r);
        assert!((slack - value(&spec, &q, &r)).abs() < 1e-15);
    }

    #[test]
    fn checks_pass_on_small_budgets() {
        let specs = [
            DivergenceSpec::euclidean(),
            DivergenceSpec::kl(),
            DivergenceSpec::renyi(2.0).unwrap(),
            DivergenceSpec::f_divergence(GeneratorName::SquaredHellinger).unwrap(),
        ];
        for spec in &specs {
            for report in [
                check_three_point(spec, 50, 3, &cfg()),
                check_convexity_on_segment(spec, 50, 3, &cfg()),
                check_self_inner_product(spec, 50, 3, &cfg()),
                check_line_identity(spec, 10, 3, &cfg()),
                check_minimizer_inequality(spec, SetKind::Ball, 4, 3, &cfg()),
                check_minimizer_inequality(spec, SetKind::Moments, 4, 3, &cfg()),
                check_minimizer_inequality(spec, SetKind::Orthogonal, 4, 3, &cfg()),
                check_centroid_optimality(spec, 2, 3, &cfg()),
                check_tangent_balls(spec, 3, 3, &cfg()),
                check_gradient(spec, 12, 3, &cfg()),
            ] {
                assert!(report.passed(), "{report:?}");
            }
        }
    }

    #[test]
    fn non_convex_bregman_fails_the_segment_check() {
        // Itakura-Saito divergence is not convex in its second argument, so
        // the check must be able to report failures.
        let spec = DivergenceSpec::bregman(GeneratorName::NegLog);
        let report = check_convexity_on_segment(&spec, 500, 1, &cfg());
        assert!(report.failures > 0);
        assert!(report.counterexample.is_some());
        assert!(report.ensure_passed().is_err());
    }

    #[test]
    fn set_kind_round_trips() {
        for k in SetKind::ALL {
            assert_eq!(k.as_str().parse::<SetKind>().unwrap(), k);
        }
        assert!("cube".parse::<SetKind>().is_err());
    }

    #[test]
    fn project_out_is_orthogonal() {
        let ones = [1.0; 4];
        let g = [0.3, -1.0, 2.0, 0.5];
        let v = project_out(&[&ones, &g], &[1.0, 2.0, 3.0, 4.0]);
        assert!(v.iter().sum::<f64>().abs() < 1e-14);
        assert!(v.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-14);
    }
}
