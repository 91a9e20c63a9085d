//! Brute-force oracles and randomized checks of the divergence-geometry
//! theorems.
//!
//! Every check draws seeded random instances, measures a slack that the
//! corresponding theorem says is nonnegative (or positive), and records the
//! most adverse slack, the number of failing trials and the first
//! counterexample in a [`CheckReport`].

mod checks;
mod oracle;
mod sampling;

pub use checks::{
    check_centroid_optimality, check_convexity_on_segment, check_gradient, check_line_identity,
    check_minimizer_inequality, check_self_inner_product, check_tangent_balls, check_three_point, SetKind,
};
pub use oracle::brute_force_minimize;
pub use sampling::InteriorSampler;

use serde::Serialize;

use crate::config::NumericConfig;
use crate::error::{DivError, Result};
use crate::family::DivergenceSpec;
use crate::generator::GeneratorName;

/// Outcome of one randomized check for one divergence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub family: String,
    pub trials: usize,
    pub worst_slack: f64,
    pub failures: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<serde_json::Value>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn ensure_passed(&self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        Err(DivError::CheckFailed {
            name: format!("{}[{}]", self.name, self.family),
            detail: self.counterexample.as_ref().map(|c| c.to_string()).unwrap_or_default(),
        })
    }
}

/// Divergences every theorem check runs on: each family, with the Bregman
/// generators that are convex in the second argument, every f-divergence
/// generator, and Rényi orders below 1, above 1 and well above 1.
pub fn registry() -> Vec<DivergenceSpec> {
    let mut specs = vec![
        DivergenceSpec::euclidean(),
        DivergenceSpec::kl(),
        DivergenceSpec::reverse_kl(),
        DivergenceSpec::bregman(GeneratorName::Square),
        DivergenceSpec::bregman(GeneratorName::Xlogx),
    ];
    for g in GeneratorName::ALL {
        specs.push(DivergenceSpec::f_divergence(g).expect("built-in generators vanish at 1"));
    }
    for a in [0.5, 2.0, 5.0] {
        specs.push(DivergenceSpec::renyi(a).expect("valid order"));
    }
    specs
}

/// Divergences the gradient check runs on: every family with every built-in
/// generator.
pub fn gradient_registry() -> Vec<DivergenceSpec> {
    let mut specs = vec![DivergenceSpec::euclidean(), DivergenceSpec::kl(), DivergenceSpec::reverse_kl()];
    for g in GeneratorName::ALL {
        specs.push(DivergenceSpec::bregman(g));
    }
    for g in GeneratorName::ALL {
        specs.push(DivergenceSpec::f_divergence(g).expect("built-in generators vanish at 1"));
    }
    for a in [0.5, 2.0, 5.0] {
        specs.push(DivergenceSpec::renyi(a).expect("valid order"));
    }
    specs
}

/// Trial counts per check, derived from a single budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteBudget {
    pub gradient: usize,
    pub three_point: usize,
    pub convexity: usize,
    pub self_inner_product: usize,
    pub line_identity: usize,
    pub minimizer: usize,
    pub centroid: usize,
    pub tangent: usize,
}

impl SuiteBudget {
    pub fn from_trials(trials: usize) -> Self {
        let scaled = |d: usize| (trials / d).max(1);
        Self {
            gradient: scaled(10),
            three_point: trials.max(1),
            convexity: scaled(2),
            self_inner_product: trials.max(1),
            line_identity: scaled(10),
            minimizer: scaled(20),
            centroid: scaled(50),
            tangent: scaled(20),
        }
    }
}

/// Runs every check for every divergence in `theorem_specs`, and the gradient
/// check for every divergence in `gradient_specs`.
///
/// Each divergence runs on its own thread; the returned reports are ordered
/// by divergence and then by check, independently of scheduling.
pub fn run_suite(
    theorem_specs: &[DivergenceSpec],
    gradient_specs: &[DivergenceSpec],
    budget: SuiteBudget,
    seed: u64,
    cfg: &NumericConfig,
) -> Vec<CheckReport> {
    std::thread::scope(|scope| {
        let gradient: Vec<_> = gradient_specs
            .iter()
            .map(|spec| scope.spawn(move || vec![check_gradient(spec, budget.gradient, seed, cfg)]))
            .collect();
        let theorems: Vec<_> = theorem_specs
            .iter()
            .map(|spec| {
                scope.spawn(move || {
                    vec![
                        check_three_point(spec, budget.three_point, seed, cfg),
                        check_convexity_on_segment(spec, budget.convexity, seed, cfg),
                        check_self_inner_product(spec, budget.self_inner_product, seed, cfg),
                        check_line_identity(spec, budget.line_identity, seed, cfg),
                        check_minimizer_inequality(spec, SetKind::Ball, budget.minimizer, seed, cfg),
                        check_minimizer_inequality(spec, SetKind::Moments, budget.minimizer, seed, cfg),
                        check_minimizer_inequality(spec, SetKind::Orthogonal, budget.minimizer, seed, cfg),
                        check_centroid_optimality(spec, budget.centroid, seed, cfg),
                        check_tangent_balls(spec, budget.tangent, seed, cfg),
                    ]
                })
            })
            .collect();
        gradient.into_iter().chain(theorems).flat_map(|h| h.join().expect("check thread panicked")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registries_cover_every_family() {
        use crate::family::Family;
        for family in Family::ALL {
            assert!(registry().iter().any(|s| s.family() == family));
            assert!(gradient_registry().iter().any(|s| s.family() == family));
        }
        assert!(registry().iter().all(|s| s.convex_in_second()));
        assert_eq!(gradient_registry().len(), 14);
    }

    #[test]
    fn suite_is_reproducible() {
        let cfg = NumericConfig::default();
        let specs = [DivergenceSpec::kl(), DivergenceSpec::renyi(2.0).unwrap()];
        let budget = SuiteBudget::from_trials(40);
        let a = run_suite(&specs, &specs, budget, 11, &cfg);
        let b = run_suite(&specs, &specs, budget, 11, &cfg);
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.passed()), "{a:#?}");
    }

    #[test]
    fn failed_report_carries_counterexample() {
        let r = CheckReport {
            name: "three_point".into(),
            family: "kl".into(),
            trials: 1,
            worst_slack: -1.0,
            failures: 1,
            seed: 0,
            counterexample: Some(serde_json::json!({"p": [0.5, 0.5]})),
        };
        match r.ensure_passed() {
            Err(DivError::CheckFailed { name, detail }) => {
                assert_eq!(name, "three_point[kl]");
                assert!(detail.contains("0.5"));
            }
            other => panic!("{other:?}"),
        }
    }
}
