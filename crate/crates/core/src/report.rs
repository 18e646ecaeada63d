//! Inequality reports shared by every checker.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|ratio − 1|` below this counts as equality.
pub const EQUALITY_TOL: f64 = 1e-6;

/// Which inequality a report evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    /// Sobolev inequality for domains.
    Thm11,
    /// Isoperimetric inequality for domains.
    Cor13,
    /// Sobolev inequality for submanifolds, codimension `p`.
    Thm14,
    /// Codimension-two specialization.
    Cor15,
    /// Isoperimetric inequality for minimal submanifolds.
    Cor17,
    /// Jacobian determinant bound along a gradient geodesic.
    Det,
    /// Jacobian determinant bound for the normal-bundle transport.
    SubDet,
    /// Volume of the sandwich set against the transported measure.
    Transport,
}

impl Theorem {
    pub fn name(&self) -> &'static str {
        match self {
            Theorem::Thm11 => "thm11",
            Theorem::Cor13 => "cor13",
            Theorem::Thm14 => "thm14",
            Theorem::Cor15 => "cor15",
            Theorem::Cor17 => "cor17",
            Theorem::Det => "det",
            Theorem::SubDet => "subdet",
            Theorem::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Equality,
    Strict,
    /// The right-hand side is ≤ 0, so the inequality says nothing.
    Trivial,
    /// `lhs/rhs < 1 − error_budget`.
    Counterexample,
    /// Both sides evaluated but the inequality is not asserted.
    EvaluationOnly,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Equality => "equality",
            Status::Strict => "strict",
            Status::Trivial => "trivial",
            Status::Counterexample => "counterexample",
            Status::EvaluationOnly => "evaluation_only",
        }
    }
}

/// Numerical tolerances shared by the checkers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub quad_tol: f64,
    pub ode_tol: f64,
    pub theta_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quad_tol: 1e-10, ode_tol: 1e-10, theta_tol: 1e-8 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("quad_tol", self.quad_tol), ("ode_tol", self.ode_tol), ("theta_tol", self.theta_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// `3·(quad_tol + θ_tol + ode_tol)`.
    pub fn error_budget(&self) -> f64 {
        3.0 * (self.quad_tol + self.theta_tol + self.ode_tol)
    }
}

/// Both sides of an inequality `lhs ≥ rhs`, with a breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub theorem: Theorem,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs`, absent when `rhs ≤ 0`.
    pub ratio: Option<f64>,
    pub slack: f64,
    pub terms: BTreeMap<String, f64>,
    pub error_budget: f64,
    pub status: Status,
    pub inputs: serde_json::Value,
}

impl InequalityReport {
    /// Classifies `lhs ≥ rhs`. When `asserted` is false the status is
    /// [`Status::EvaluationOnly`] unless the right side is trivial.
    pub fn new(
        theorem: Theorem,
        lhs: f64,
        rhs: f64,
        terms: BTreeMap<String, f64>,
        error_budget: f64,
        inputs: serde_json::Value,
        asserted: bool,
    ) -> Self {
        let ratio = (rhs > 0.0).then(|| lhs / rhs);
        let status = match ratio {
            None => Status::Trivial,
            Some(_) if !asserted => Status::EvaluationOnly,
            Some(q) if q < 1.0 - error_budget => Status::Counterexample,
            Some(q) if (q - 1.0).abs() < EQUALITY_TOL => Status::Equality,
            Some(_) => Status::Strict,
        };
        Self { theorem, lhs, rhs, ratio, slack: lhs - rhs, terms, error_budget, status, inputs }
    }

    pub fn is_counterexample(&self) -> bool {
        self.status == Status::Counterexample
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.get(name).copied()
    }
}

/// Builds a term map from `(name, value)` pairs.
pub fn terms<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
