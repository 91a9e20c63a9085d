use crate::config::NumericConfig;
use crate::error::{DivError, Result};
use crate::family::DivergenceSpec;

/// A probability vector on a finite, labelled support.
///
/// The dominating measure is counting measure on the atoms, so densities and
/// masses coincide and every integral is a sum over atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    mass: Vec<f64>,
    labels: Vec<f64>,
}

fn default_labels(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

fn check_labels(labels: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    match labels {
        None => Ok(default_labels(n)),
        Some(l) if l.len() != n => Err(DivError::DimensionMismatch { expected: n, found: l.len() }),
        Some(l) => Ok(l.to_vec()),
    }
}

fn check_entries(weights: &[f64]) -> Result<()> {
    if weights.len() < 2 {
        return Err(DivError::EmptySupport(weights.len()));
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(DivError::NonFiniteMass { index });
        }
        if value < 0.0 {
            return Err(DivError::NegativeMass { index, value });
        }
    }
    Ok(())
}

/// Normalizes nonnegative weights into a distribution.
///
/// Labels default to the atom indices `0..n`.
pub fn make_distribution(
    weights: &[f64],
    labels: Option<&[f64]>,
    _cfg: &NumericConfig,
) -> Result<DiscreteDistribution> {
    check_entries(weights)?;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(DivError::ZeroTotalMass);
    }
    Ok(DiscreteDistribution {
        mass: weights.iter().map(|w| w / total).collect(),
        labels: check_labels(labels, weights.len())?,
    })
}

/// Checks that `dist` lies in the domain of `spec`: for families with
/// singular derivatives at 0 every atom must carry at least `interior_floor`.
pub fn validate_for_family(dist: &DiscreteDistribution, spec: &DivergenceSpec, cfg: &NumericConfig) -> Result<()> {
    if !spec.requires_interior() {
        return Ok(());
    }
    match dist.mass.iter().enumerate().find(|(_, &m)| m < cfg.interior_floor) {
        Some((index, &value)) => Err(DivError::DomainViolation { index, value, family: spec.label() }),
        None => Ok(()),
    }
}

impl DiscreteDistribution {
    /// Wraps an already-normalized mass vector without rescaling it.
    pub fn new(mass: Vec<f64>, labels: Option<Vec<f64>>, cfg: &NumericConfig) -> Result<Self> {
        check_entries(&mass)?;
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() > cfg.simplex_tol {
            return Err(DivError::NotNormalized { sum });
        }
        let labels = check_labels(labels.as_deref(), mass.len())?;
        Ok(Self { mass, labels })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        make_distribution(&vec![1.0; n], None, &NumericConfig::default())
    }

    /// Solver output: trusted to be on the simplex up to rounding.
    pub(crate) fn from_solver(mass: Vec<f64>, labels: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), labels.len());
        Self { mass, labels }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        self.labels = check_labels(Some(&labels), self.mass.len())?;
        Ok(self)
    }

    /// `(1 - t) self + t other`, keeping `self`'s labels.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        self.same_support(other)?;
        Ok(Self {
            mass: self.mass.iter().zip(&other.mass).map(|(a, b)| (1.0 - t) * a + t * b).collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `E[T(Z)]` for a statistic evaluated on the atoms.
    pub fn expectation(&self, statistic: &[f64]) -> f64 {
        self.mass.iter().zip(statistic).map(|(m, t)| m * t).sum()
    }

    pub(crate) fn same_support(&self, other: &Self) -> Result<()> {
        if self.mass.len() != other.mass.len() {
            return Err(DivError::SupportMismatch { left: self.mass.len(), right: other.mass.len() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> NumericConfig {
        NumericConfig::default()
    }

    #[test]
    fn normalizes_weights() {
        assert_eq!(make_distribution(&[2.0, 2.0], None, &cfg()).unwrap().mass(), &[0.5, 0.5]);
        assert_eq!(make_distribution(&[1.0, 3.0], None, &cfg()).unwrap().mass(), &[0.25, 0.75]);
        let d = make_distribution(&[1.0, 1.0, 2.0], None, &cfg()).unwrap();
        assert_eq!(d.mass(), &[0.25, 0.25, 0.5]);
        assert_eq!(d.labels(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_weights() {
        assert_eq!(make_distribution(&[1.0], None, &cfg()), Err(DivError::EmptySupport(1)));
        assert_eq!(make_distribution(&[], None, &cfg()), Err(DivError::EmptySupport(0)));
        assert!(matches!(make_distribution(&[1.0, -0.5], None, &cfg()), Err(DivError::NegativeMass { index: 1, .. })));
        assert_eq!(make_distribution(&[0.0, 0.0], None, &cfg()), Err(DivError::ZeroTotalMass));
        assert!(matches!(make_distribution(&[1.0, f64::NAN], None, &cfg()), Err(DivError::NonFiniteMass { index: 1 })));
        assert!(matches!(
            make_distribution(&[1.0, 1.0], Some(&[0.0]), &cfg()),
            Err(DivError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn new_does_not_rescale() {
        assert!(matches!(DiscreteDistribution::new(vec![0.5, 0.6], None, &cfg()), Err(DivError::NotNormalized { .. })));
        let d = DiscreteDistribution::new(vec![0.1, 0.2, 0.7], Some(vec![-1.0, 0.0, 1.0]), &cfg()).unwrap();
        assert_eq!(d.mass(), &[0.1, 0.2, 0.7]);
        assert_eq!(d.labels(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn family_domains() {
        let interior = make_distribution(&[0.5, 0.5], None, &cfg()).unwrap();
        let edge = make_distribution(&[0.0, 1.0], None, &cfg()).unwrap();
        validate_for_family(&interior, &DivergenceSpec::kl(), &cfg()).unwrap();
        assert!(matches!(
            validate_for_family(&edge, &DivergenceSpec::kl(), &cfg()),
            Err(DivError::DomainViolation { index: 0, .. })
        ));
        validate_for_family(&edge, &DivergenceSpec::euclidean(), &cfg()).unwrap();
    }

    proptest! {
        #[test]
        fn make_distribution_is_idempotent(w in prop::collection::vec(0.01f64..10.0, 2..12)) {
            let once = make_distribution(&w, None, &cfg()).unwrap();
            let twice = make_distribution(once.mass(), None, &cfg()).unwrap();
            prop_assert!(once.max_abs_diff(&twice) <= cfg().simplex_tol);
        }

        #[test]
        fn floored_outputs_pass_every_family(w in prop::collection::vec(0.01f64..10.0, 2..12)) {
            use crate::generator::GeneratorName;
            let d = make_distribution(&w, None, &cfg()).unwrap();
            let mut specs = vec![
                DivergenceSpec::euclidean(),
                DivergenceSpec::kl(),
                DivergenceSpec::reverse_kl(),
                DivergenceSpec::renyi(0.5).unwrap(),
            ];
            for g in GeneratorName::ALL {
                specs.push(DivergenceSpec::bregman(g));
                specs.push(DivergenceSpec::f_divergence(g).unwrap());
            }
            for s in &specs {
                prop_assert!(validate_for_family(&d, s, &cfg()).is_ok());
            }
        }
    }
}
