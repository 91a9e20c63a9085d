//! Scalar convex generators for the Bregman and f-divergence families.
//!
//! A generator carries `f`, its derivatives, and the derivatives of the
//! conjugate-perspective `f̃(x) = x f(1/x)`, which is what the
//! second-argument gradient of an f-divergence is written in terms of.
//!
//! | name                | f(x)          | f̃(x)         |
//! |---------------------|---------------|---------------|
//! | `xlogx`             | x ln x        | -ln x         |
//! | `square`            | (x - 1)²      | (1 - x)² / x  |
//! | `neg_log`           | -ln x         | x ln x        |
//! | `squared_hellinger` | (√x - 1)²     | (1 - √x)²     |
//!
//! `square` is shifted so that `f(1) = 0`; the shift is affine and leaves every
//! Bregman divergence unchanged.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DivError, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The closed registry of named generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorName {
    Xlogx,
    Square,
    NegLog,
    SquaredHellinger,
}

impl GeneratorName {
    pub const ALL: [GeneratorName; 4] =
        [GeneratorName::Xlogx, GeneratorName::Square, GeneratorName::NegLog, GeneratorName::SquaredHellinger];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorName::Xlogx => "xlogx",
            GeneratorName::Square => "square",
            GeneratorName::NegLog => "neg_log",
            GeneratorName::SquaredHellinger => "squared_hellinger",
        }
    }
}

impl fmt::Display for GeneratorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorName {
    type Err = DivError;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorName::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| DivError::InvalidSpec(format!("unknown generator '{s}'")))
    }
}

#[derive(Clone)]
struct CustomGenerator {
    name: String,
    f: ScalarFn,
    df: ScalarFn,
    dual_df: ScalarFn,
}

#[derive(Clone)]
enum Kind {
    Builtin(GeneratorName),
    Custom(Arc<CustomGenerator>),
}

/// A strictly convex, differentiable scalar function `f` together with the
/// derivatives the divergence formulas need.
#[derive(Clone)]
pub struct GeneratorSpec {
    kind: Kind,
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("GeneratorSpec").field(&self.name()).finish()
    }
}

impl PartialEq for GeneratorSpec {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (Kind::Builtin(a), Kind::Builtin(b)) => a == b,
            (Kind::Custom(a), Kind::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl From<GeneratorName> for GeneratorSpec {
    fn from(name: GeneratorName) -> Self {
        GeneratorSpec::builtin(name)
    }
}

// Relative step for derivatives of user-supplied generators.
const CUSTOM_FD_REL_STEP: f64 = 1e-4;

fn central_diff(g: &ScalarFn, x: f64) -> f64 {
    let h = CUSTOM_FD_REL_STEP * x.abs().max(1e-3);
    (g(x + h) - g(x - h)) / (2.0 * h)
}

impl GeneratorSpec {
    pub fn builtin(name: GeneratorName) -> Self {
        Self { kind: Kind::Builtin(name) }
    }

    /// Registers a user-supplied generator from `(f, f', f̃')`.
    ///
    /// The triple is checked numerically: `f` must have positive second
    /// differences on a sample grid over `(0, 2]`, and `f'` / `f̃'` must agree
    /// with central differences of `f` / `f̃`.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dual_df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self {
            kind: Kind::Custom(Arc::new(CustomGenerator {
                name: name.into(),
                f: Arc::new(f),
                df: Arc::new(df),
                dual_df: Arc::new(dual_df),
            })),
        };
        if !spec.is_strictly_convex_on_grid() {
            return Err(DivError::InvalidSpec(format!(
                "generator '{}' is not strictly convex on the sample grid",
                spec.name()
            )));
        }
        for x in sample_grid() {
            let h = 1e-5 * x;
            let fd = (spec.eval(x + h) - spec.eval(x - h)) / (2.0 * h);
            let dual = |y: f64| y * spec.eval(1.0 / y);
            let fd_dual = (dual(x + h) - dual(x - h)) / (2.0 * h);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-5 * (1.0 + b.abs());
            if !close(spec.deriv(x), fd) || !close(spec.dual_deriv(x), fd_dual) {
                return Err(DivError::InvalidSpec(format!(
                    "generator '{}' derivatives disagree with f at x = {x}",
                    spec.name()
                )));
            }
        }
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            Kind::Builtin(n) => n.as_str(),
            Kind::Custom(c) => &c.name,
        }
    }

    pub fn builtin_name(&self) -> Option<GeneratorName> {
        match self.kind {
            Kind::Builtin(n) => Some(n),
            Kind::Custom(_) => None,
        }
    }

    /// True when `f` or one of its derivatives is singular at 0.
    pub fn needs_positive_domain(&self) -> bool {
        !matches!(self.kind, Kind::Builtin(GeneratorName::Square))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(GeneratorName::Xlogx) => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            Kind::Builtin(GeneratorName::Square) => (x - 1.0) * (x - 1.0),
            Kind::Builtin(GeneratorName::NegLog) => -x.ln(),
            Kind::Builtin(GeneratorName::SquaredHellinger) => {
                let s = x.sqrt() - 1.0;
                s * s
            }
            Kind::Custom(c) => (c.f)(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(GeneratorName::Xlogx) => x.ln() + 1.0,
            Kind::Builtin(GeneratorName::Square) => 2.0 * (x - 1.0),
            Kind::Builtin(GeneratorName::NegLog) => -1.0 / x,
            Kind::Builtin(GeneratorName::SquaredHellinger) => 1.0 - 1.0 / x.sqrt(),
            Kind::Custom(c) => (c.df)(x),
        }
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(GeneratorName::Xlogx) => 1.0 / x,
            Kind::Builtin(GeneratorName::Square) => 2.0,
            Kind::Builtin(GeneratorName::NegLog) => 1.0 / (x * x),
            Kind::Builtin(GeneratorName::SquaredHellinger) => 0.5 / (x * x.sqrt()),
            Kind::Custom(c) => central_diff(&c.df, x),
        }
    }

    pub fn third_deriv(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(GeneratorName::Xlogx) => -1.0 / (x * x),
            Kind::Builtin(GeneratorName::Square) => 0.0,
            Kind::Builtin(GeneratorName::NegLog) => -2.0 / (x * x * x),
            Kind::Builtin(GeneratorName::SquaredHellinger) => -0.75 / (x * x * x.sqrt()),
            Kind::Custom(c) => {
                let df = c.df.clone();
                let second: ScalarFn = Arc::new(move |y| central_diff(&df, y));
                central_diff(&second, x)
            }
        }
    }

    /// `f̃'(x)` where `f̃(x) = x f(1/x)`.
    pub fn dual_deriv(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(GeneratorName::Xlogx) => -1.0 / x,
            Kind::Builtin(GeneratorName::Square) => 1.0 - 1.0 / (x * x),
            Kind::Builtin(GeneratorName::NegLog) => x.ln() + 1.0,
            Kind::Builtin(GeneratorName::SquaredHellinger) => 1.0 - 1.0 / x.sqrt(),
            Kind::Custom(c) => (c.dual_df)(x),
        }
    }

    /// `f̃''(x)`.
    pub fn dual_second_deriv(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(GeneratorName::Xlogx) => 1.0 / (x * x),
            Kind::Builtin(GeneratorName::Square) => 2.0 / (x * x * x),
            Kind::Builtin(GeneratorName::NegLog) => 1.0 / x,
            Kind::Builtin(GeneratorName::SquaredHellinger) => 0.5 / (x * x.sqrt()),
            Kind::Custom(c) => central_diff(&c.dual_df, x),
        }
    }

    /// Second differences of `f` on 20 points in `(0, 2]` are all positive.
    pub fn is_strictly_convex_on_grid(&self) -> bool {
        sample_grid().all(|x| {
            let h = 1e-3 * x;
            self.eval(x - h) - 2.0 * self.eval(x) + self.eval(x + h) > 0.0
        })
    }
}

fn sample_grid() -> impl Iterator<Item = f64> {
    (1..=20).map(|k| 0.1 * k as f64)
}
