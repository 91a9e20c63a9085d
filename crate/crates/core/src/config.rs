use serde::{Deserialize, Serialize};

use crate::error::{DivError, Result};

/// Tolerances and iteration limits shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericConfig {
    /// Absolute tolerance on `|sum(mass) - 1|`.
    pub simplex_tol: f64,
    /// Smallest atom mass accepted by families with singular derivatives at 0.
    pub interior_floor: f64,
    /// Relative step for finite-difference gradient checks.
    pub grad_fd_step: f64,
    /// Residual target for every solver.
    pub solver_tol: f64,
    pub max_iter: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self { simplex_tol: 1e-9, interior_floor: 1e-12, grad_fd_step: 1e-6, solver_tol: 1e-10, max_iter: 200 }
    }
}

impl NumericConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("simplex_tol", self.simplex_tol),
            ("interior_floor", self.interior_floor),
            ("grad_fd_step", self.grad_fd_step),
            ("solver_tol", self.solver_tol),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(DivError::InvalidConfig(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if self.interior_floor > 1e-6 {
            return Err(DivError::InvalidConfig(format!(
                "interior_floor must be <= 1e-6, got {}",
                self.interior_floor
            )));
        }
        if self.max_iter == 0 {
            return Err(DivError::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        NumericConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_non_positive_tolerances() {
        let cfg = NumericConfig { solver_tol: 0.0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(DivError::InvalidConfig(_))));
        let cfg = NumericConfig { interior_floor: 1e-3, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
