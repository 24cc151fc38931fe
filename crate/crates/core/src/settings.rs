//! Process-wide numeric tolerances.
//!
//! Every iterative routine reads its tolerances and iteration budget from a
//! single [`NumericSettings`] record. The record can be replaced at start-up
//! (the CLI does this from `ARCTIC_NUMERIC_TOL`).

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericSettings {
    /// Residual tolerance for the algebraic system defining x(t), y(t).
    pub residual_tol: f64,
    /// Tolerance on |L'(t) - v| for inversions of L'.
    pub inversion_tol: f64,
    /// Absolute tolerance of the adaptive quadrature.
    pub quadrature_tol: f64,
    /// Iteration budget shared by all iterative solvers.
    pub max_iterations: usize,
    /// Maximum number of subintervals in adaptive quadrature.
    pub max_subintervals: usize,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            inversion_tol: 1e-10,
            quadrature_tol: 1e-10,
            max_iterations: 200,
            max_subintervals: 4000,
        }
    }
}

static GLOBAL: RwLock<NumericSettings> = RwLock::new(NumericSettings {
    residual_tol: 1e-12,
    inversion_tol: 1e-10,
    quadrature_tol: 1e-10,
    max_iterations: 200,
    max_subintervals: 4000,
});

impl NumericSettings {
    /// Snapshot of the global record.
    pub fn current() -> Self {
        *GLOBAL.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Replaces the global record.
    pub fn install(self) {
        *GLOBAL.write().unwrap_or_else(|e| e.into_inner()) = self;
    }

    /// Applies an override string.
    ///
    /// A bare number sets `residual_tol`. Otherwise the string is a comma
    /// separated list of `key=value` pairs with keys `residual`, `inversion`,
    /// `quadrature`, `iterations` and `subintervals`.
    pub fn with_override(mut self, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Ok(v) = spec.parse::<f64>() {
            self.residual_tol = positive(v, "residual")?;
            return Ok(self);
        }
        for pair in spec.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::DomainError(format!("bad tolerance override `{pair}`")))?;
            let key = key.trim();
            let value = value.trim();
            let bad = || Error::DomainError(format!("bad value `{value}` for `{key}`"));
            match key {
                "residual" => self.residual_tol = positive(value.parse().map_err(|_| bad())?, key)?,
                "inversion" => {
                    self.inversion_tol = positive(value.parse().map_err(|_| bad())?, key)?
                }
                "quadrature" => {
                    self.quadrature_tol = positive(value.parse().map_err(|_| bad())?, key)?
                }
                "iterations" => self.max_iterations = value.parse().map_err(|_| bad())?,
                "subintervals" => self.max_subintervals = value.parse().map_err(|_| bad())?,
                _ => return Err(Error::DomainError(format!("unknown tolerance key `{key}`"))),
            }
        }
        Ok(self)
    }
}

fn positive(v: f64, key: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::DomainError(format!(
            "`{key}` must be a positive number"
        )))
    }
}
