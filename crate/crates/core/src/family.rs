use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DivError, Result};
use crate::generator::{GeneratorName, GeneratorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Euclidean,
    Kl,
    ReverseKl,
    Bregman,
    FDivergence,
    Renyi,
}

impl Family {
    pub const ALL: [Family; 6] =
        [Family::Euclidean, Family::Kl, Family::ReverseKl, Family::Bregman, Family::FDivergence, Family::Renyi];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Euclidean => "euclidean",
            Family::Kl => "kl",
            Family::ReverseKl => "reverse_kl",
            Family::Bregman => "bregman",
            Family::FDivergence => "f_divergence",
            Family::Renyi => "renyi",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = DivError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| DivError::InvalidSpec(format!("unknown family '{s}'")))
    }
}

/// Selects one divergence `D(·‖·)`: a family plus its generator or order.
///
/// Fields are private so that every value in circulation satisfies the
/// family's requirements (generator present for Bregman/f, Rényi order in
/// `(0, 1) ∪ (1, ∞)`, `f(1) = 0` for f-divergences).
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceSpec {
    family: Family,
    generator: Option<GeneratorSpec>,
    alpha: Option<f64>,
}

impl DivergenceSpec {
    pub fn new(family: Family, generator: Option<GeneratorSpec>, alpha: Option<f64>) -> Result<Self> {
        match family {
            Family::Bregman | Family::FDivergence => {
                let g = generator
                    .as_ref()
                    .ok_or_else(|| DivError::InvalidSpec(format!("{family} requires a generator")))?;
                if family == Family::FDivergence && g.eval(1.0) != 0.0 {
                    return Err(DivError::InvalidSpec(format!(
                        "f-divergence generator '{}' has f(1) = {} != 0",
                        g.name(),
                        g.eval(1.0)
                    )));
                }
                if alpha.is_some() {
                    return Err(DivError::InvalidSpec(format!("{family} takes no alpha")));
                }
            }
            Family::Renyi => {
                let a = alpha.ok_or_else(|| DivError::InvalidSpec("renyi requires alpha".into()))?;
                if !(a.is_finite() && a > 0.0) {
                    return Err(DivError::InvalidSpec(format!("renyi alpha must lie in (0, inf), got {a}")));
                }
                if a == 1.0 {
                    return Err(DivError::InvalidSpec("renyi alpha = 1 is the kl family; request family=kl".into()));
                }
                if generator.is_some() {
                    return Err(DivError::InvalidSpec("renyi takes no generator".into()));
                }
            }
            Family::Euclidean | Family::Kl | Family::ReverseKl => {
                if generator.is_some() || alpha.is_some() {
                    return Err(DivError::InvalidSpec(format!("{family} takes neither generator nor alpha")));
                }
            }
        }
        Ok(Self { family, generator, alpha })
    }

    pub fn euclidean() -> Self {
        Self::new(Family::Euclidean, None, None).unwrap()
    }

    pub fn kl() -> Self {
        Self::new(Family::Kl, None, None).unwrap()
    }

    pub fn reverse_kl() -> Self {
        Self::new(Family::ReverseKl, None, None).unwrap()
    }

    pub fn bregman(generator: impl Into<GeneratorSpec>) -> Self {
        Self::new(Family::Bregman, Some(generator.into()), None).unwrap()
    }

    pub fn f_divergence(generator: impl Into<GeneratorSpec>) -> Result<Self> {
        Self::new(Family::FDivergence, Some(generator.into()), None)
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Self::new(Family::Renyi, None, Some(alpha))
    }

    /// Builds a spec from the textual form used by the CLI and JSON files.
    pub fn from_parts(family: &str, generator: Option<&str>, alpha: Option<f64>) -> Result<Self> {
        let family: Family = family.parse()?;
        let generator = generator.map(|g| g.parse::<GeneratorName>().map(GeneratorSpec::builtin)).transpose()?;
        Self::new(family, generator, alpha)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn generator(&self) -> Option<&GeneratorSpec> {
        self.generator.as_ref()
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Families whose value or derivatives are singular at a zero atom.
    pub fn requires_interior(&self) -> bool {
        match self.family {
            Family::Euclidean => false,
            Family::Bregman => self.generator.as_ref().is_none_or(GeneratorSpec::needs_positive_domain),
            _ => true,
        }
    }

    /// Whether `Q ↦ D(P‖Q)` is strictly convex on the simplex.
    ///
    /// A Bregman divergence is always convex in its first argument but only
    /// for some generators in its second: with `neg_log` (Itakura-Saito) the
    /// curvature in `q` is `(2p - q) / q³`, negative once `q > 2p`, and with
    /// `squared_hellinger` it is `(3p - q) / (4 q^{5/2})`.
    pub fn convex_in_second(&self) -> bool {
        match self.family {
            Family::Bregman => matches!(
                self.generator.as_ref().and_then(GeneratorSpec::builtin_name),
                Some(GeneratorName::Square) | Some(GeneratorName::Xlogx)
            ),
            _ => true,
        }
    }

    pub fn has_first_derivative(&self) -> bool {
        self.family != Family::Renyi
    }

    /// A short label such as `kl`, `bregman[square]` or `renyi[2]`.
    pub fn label(&self) -> String {
        match (&self.generator, self.alpha) {
            (Some(g), _) => format!("{}[{}]", self.family, g.name()),
            (None, Some(a)) => format!("{}[{}]", self.family, a),
            (None, None) => self.family.to_string(),
        }
    }
}

impl fmt::Display for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
