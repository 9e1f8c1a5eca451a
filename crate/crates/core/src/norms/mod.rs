//! Constrained-supremum norms `‖a‖_{X,p}` and `‖A‖_{X,Y,p}`.
//!
//! `‖a‖_{X,p} = sup { Σ a_i x_i : Σ N̂(x_i) <= p }` and the bilinear norm is
//! the same supremum of `xᵀ A y` over the product of two such sets.

mod bilinear;
mod envelope;
mod generic;
mod mixed;
mod water;

pub use bilinear::{bilinear_norm, bilinear_norm_with, BudgetOracle, L2BoxOracle, LinearOracle, LrBoxOracle};
pub use envelope::{linear_norm_envelope, rademacher_f};
pub use generic::PreparedBudget;
pub use mixed::{lr_box_radius_sq, lr_box_sup, mixed_budget_sup, mixed_cost};
pub use water::ell2_ellinf_sup;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionModel, Kind};
use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    KktExact,
    DualNumeric,
    Alternating,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::KktExact => "kkt_exact",
            Method::DualNumeric => "dual_numeric",
            Method::Alternating => "alternating",
        }
    }
}

/// Solver output: the value, a point attaining it, and for bilinear problems
/// an upper bound on the true supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSolution {
    pub value: f64,
    pub certificate_x: Vec<f64>,
    pub certificate_y: Option<Vec<f64>>,
    pub method: Method,
    pub feasibility_slack: f64,
    /// Upper bound on the supremum for bilinear problems; equals `value` for
    /// linear ones.
    pub upper: f64,
}

impl NormSolution {
    pub(crate) fn linear(value: f64, x: Vec<f64>, method: Method, slack: f64) -> Self {
        let value = value.max(0.0);
        Self { value, certificate_x: x, certificate_y: None, method, feasibility_slack: slack, upper: value }
    }

    pub fn lower(&self) -> f64 {
        self.value
    }
}

/// A budget set `{Σ N̂(x_i) <= p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBudget {
    pub p: f64,
    pub model: DistributionModel,
}

impl ConstraintBudget {
    pub fn new(p: f64, model: DistributionModel) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("budget p must be a finite value >= 1, got {p}")));
        }
        Ok(Self { p, model })
    }

    /// `Σ N̂(x_i)` for a candidate point.
    pub fn cost(&self, x: &[f64]) -> Result<f64> {
        x.iter().map(|&t| self.model.nhat(t)).sum()
    }

    /// `sup Σ x_i²` over the set (upper bound for the generic models).
    pub fn radius_sq(&self, dim: usize) -> Result<f64> {
        let s = self.model.scale();
        Ok(match self.model.kind() {
            Kind::SquareTail if s == 1.0 => self.p,
            Kind::Rademacher if s <= 1.0 => self.p.min(dim as f64),
            Kind::WeibullSym { r } if s == 1.0 => {
                let psi = self.p.powf(1.0 / r);
                if psi > 1.0 {
                    psi * psi
                } else {
                    self.p
                }
            }
            _ => PreparedBudget::new(&self.model, self.p, 1e-10)?.radius_sq_bound(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub multi_starts: usize,
    pub rel_tol: f64,
    pub bisect_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { multi_starts: 16, rel_tol: 1e-8, bisect_tol: 1e-10, max_iter: 500, seed: 0x5eed, exec: Exec::default() }
    }
}

/// `‖a‖_{X,p}` with a maximizing point.
pub fn linear_norm(a: &[f64], budget: &ConstraintBudget) -> Result<NormSolution> {
    linear_norm_with(a, budget, &SolverConfig::default())
}

pub fn linear_norm_with(a: &[f64], budget: &ConstraintBudget, cfg: &SolverConfig) -> Result<NormSolution> {
    let p = budget.p;
    let model = &budget.model;
    if a.iter().all(|&v| v == 0.0) {
        return Ok(NormSolution::linear(0.0, vec![0.0; a.len()], Method::ClosedForm, 0.0));
    }
    let s = model.scale();
    Ok(match model.kind() {
        Kind::SquareTail if s == 1.0 => {
            let norm = crate::coeffs::l2(a);
            let x: Vec<f64> = a.iter().map(|v| v * p.sqrt() / norm).collect();
            NormSolution::linear(p.sqrt() * norm, x, Method::ClosedForm, 0.0)
        }
        Kind::Rademacher if s <= 1.0 => ell2_ellinf_sup(a, p, 1.0),
        Kind::WeibullSym { r } if s == 1.0 => mixed_budget_sup(a, p, *r, f64::INFINITY),
        _ => PreparedBudget::new(model, p, cfg.bisect_tol)?.solve(a),
    })
}
