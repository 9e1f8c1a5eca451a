//! `sup { xᵀ A y : x ∈ K_X, y ∈ K_Y }` for symmetric budget sets.
//!
//! The problem is bilinear and non-convex, so the reported value is the best
//! point found by alternating maximization from several starts (a certified
//! lower bound) and `upper` is a relaxation bound.

use rand::Rng;
use rand_distr::StandardNormal;

use super::generic::PreparedBudget;
use super::mixed::{lr_box_radius_sq, lr_box_sup};
use super::water::ell2_ellinf_sup;
use super::{linear_norm_with, ConstraintBudget, Method, NormSolution, SolverConfig};
use crate::coeffs::{l2, CoeffMatrix};
use crate::distributions::Kind;
use crate::error::{Error, Result};
use crate::rng;

/// A symmetric convex-or-not set `K` accessed through its support function
/// `W(a) = sup_{x ∈ K} Σ a_i x_i`.
pub trait LinearOracle: Sync {
    fn sup(&self, a: &[f64]) -> Result<NormSolution>;

    /// Faster, possibly less accurate `sup` used inside iterations.
    fn sup_fast(&self, a: &[f64]) -> Result<NormSolution> {
        self.sup(a)
    }

    /// `sup_{x ∈ K} Σ x_i²` for sets of dimension `dim`.
    fn radius_sq(&self, dim: usize) -> Result<f64>;

    /// Whether `sup` is exact, so that it may be used in upper bounds.
    fn exact(&self) -> bool;
}

/// The budget set `{Σ N̂(x_i) <= p}` of a distribution model.
pub struct BudgetOracle {
    budget: ConstraintBudget,
    prepared: Option<PreparedBudget>,
    cfg: SolverConfig,
}

impl BudgetOracle {
    pub fn new(budget: &ConstraintBudget, cfg: &SolverConfig) -> Result<Self> {
        let prepared = if Self::has_exact_solver(budget) {
            None
        } else {
            Some(PreparedBudget::new(&budget.model, budget.p, cfg.bisect_tol)?)
        };
        Ok(Self { budget: budget.clone(), prepared, cfg: *cfg })
    }

    fn has_exact_solver(budget: &ConstraintBudget) -> bool {
        let s = budget.model.scale();
        match budget.model.kind() {
            Kind::SquareTail | Kind::WeibullSym { .. } => s == 1.0,
            Kind::Rademacher => s <= 1.0,
            _ => false,
        }
    }
}

impl LinearOracle for BudgetOracle {
    fn sup(&self, a: &[f64]) -> Result<NormSolution> {
        match &self.prepared {
            Some(pb) => Ok(pb.solve(a)),
            None => linear_norm_with(a, &self.budget, &self.cfg),
        }
    }

    fn sup_fast(&self, a: &[f64]) -> Result<NormSolution> {
        match &self.prepared {
            Some(pb) => Ok(pb.solve_fast(a)),
            None => linear_norm_with(a, &self.budget, &self.cfg),
        }
    }

    fn radius_sq(&self, dim: usize) -> Result<f64> {
        match &self.prepared {
            Some(pb) => Ok(pb.radius_sq_bound()),
            None => self.budget.radius_sq(dim),
        }
    }

    fn exact(&self) -> bool {
        self.prepared.is_none()
    }
}

/// `{Σ t_i² <= p, |t_i| <= cap}`.
#[derive(Debug, Clone, Copy)]
pub struct L2BoxOracle {
    pub p: f64,
    pub cap: f64,
}

impl LinearOracle for L2BoxOracle {
    fn sup(&self, a: &[f64]) -> Result<NormSolution> {
        Ok(ell2_ellinf_sup(a, self.p, self.cap))
    }

    fn radius_sq(&self, dim: usize) -> Result<f64> {
        Ok(self.p.min(dim as f64 * self.cap * self.cap))
    }

    fn exact(&self) -> bool {
        true
    }
}

/// `{Σ |t_i|^r <= p, |t_i| <= cap}` with `r <= 1`.
#[derive(Debug, Clone, Copy)]
pub struct LrBoxOracle {
    pub p: f64,
    pub r: f64,
    pub cap: f64,
}

impl LinearOracle for LrBoxOracle {
    fn sup(&self, a: &[f64]) -> Result<NormSolution> {
        Ok(lr_box_sup(a, self.p, self.r, self.cap))
    }

    fn radius_sq(&self, dim: usize) -> Result<f64> {
        Ok(lr_box_radius_sq(self.p, self.r, self.cap, dim))
    }

    fn exact(&self) -> bool {
        true
    }
}

/// `‖A‖_{X,Y,p}` for two model budgets.
pub fn bilinear_norm(a: &CoeffMatrix, bx: &ConstraintBudget, by: &ConstraintBudget) -> Result<NormSolution> {
    let cfg = SolverConfig::default();
    let sx = bx.model.scale();
    let sy = by.model.scale();
    if matches!(bx.model.kind(), Kind::SquareTail)
        && matches!(by.model.kind(), Kind::SquareTail)
        && sx == 1.0
        && sy == 1.0
    {
        return Ok(square_tail_exact(a, bx.p, by.p));
    }
    let ox = BudgetOracle::new(bx, &cfg)?;
    let oy = BudgetOracle::new(by, &cfg)?;
    bilinear_norm_with(a, &ox, &oy, &cfg)
}

/// Both sets are Euclidean balls: the supremum is `√(p_x p_y)·σ_max(A)`.
fn square_tail_exact(a: &CoeffMatrix, px: f64, py: f64) -> NormSolution {
    let (sigma, v) = a.operator_norm_with(1e-13);
    let value = (px * py).sqrt() * sigma;
    let (x, y) = if sigma > 0.0 {
        let u = a.mul_vec(&v);
        let nu = l2(&u);
        (u.iter().map(|t| t / nu * px.sqrt()).collect(), v.iter().map(|t| t * py.sqrt()).collect())
    } else {
        (vec![0.0; a.rows()], vec![0.0; a.cols()])
    };
    let slack = (l2(&x).powi(2) - px).max(0.0) + (l2(&y).powi(2) - py).max(0.0);
    NormSolution {
        value,
        certificate_x: x,
        certificate_y: Some(y),
        method: Method::ClosedForm,
        feasibility_slack: slack,
        upper: value,
    }
}

struct Run {
    value: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Alternating maximization from one starting `y`; `fast` selects the
/// oracle entry point used in the loop.
fn alternate(
    a: &CoeffMatrix,
    ox: &dyn LinearOracle,
    oy: &dyn LinearOracle,
    y0: Vec<f64>,
    cfg: &SolverConfig,
    fast: bool,
) -> Result<Run> {
    let call = |o: &dyn LinearOracle, v: &[f64]| if fast { o.sup_fast(v) } else { o.sup(v) };
    let mut y = y0;
    let mut x = call(ox, &a.mul_vec(&y))?.certificate_x;
    let mut value = a.bilinear(&x, &y);
    for _ in 0..cfg.max_iter {
        let ys = call(oy, &a.mul_t_vec(&x))?;
        let xs = call(ox, &a.mul_vec(&ys.certificate_x))?;
        let next = a.bilinear(&xs.certificate_x, &ys.certificate_x);
        if next > value {
            let done = next - value <= cfg.rel_tol * next.abs();
            value = next;
            x = xs.certificate_x;
            y = ys.certificate_x;
            if done {
                break;
            }
        } else {
            break;
        }
    }
    Ok(Run { value, x, y })
}

/// Starting `y` vectors: top right singular vector, coordinate directions,
/// then seeded random directions, each mapped to its maximizing point in `K_Y`.
fn starts(a: &CoeffMatrix, oy: &dyn LinearOracle, cfg: &SolverConfig) -> Result<Vec<Vec<f64>>> {
    let m = a.cols();
    let count = cfg.multi_starts.max(1);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(count);
    dirs.push(a.operator_norm_with(1e-10).1);
    let cn = a.col_l2_norms();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| cn[j].total_cmp(&cn[i]));
    for &j in order.iter().take((count - 1) / 2) {
        if cn[j] > 0.0 {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            dirs.push(e);
        }
    }
    let mut r = rng::stream(cfg.seed, u32::MAX, 0);
    while dirs.len() < count {
        dirs.push((0..m).map(|_| r.sample::<f64, _>(StandardNormal)).collect());
    }
    dirs.iter().map(|d| oy.sup(d).map(|s| s.certificate_x)).collect()
}

/// Bilinear supremum through arbitrary oracles.
pub fn bilinear_norm_with(
    a: &CoeffMatrix,
    ox: &dyn LinearOracle,
    oy: &dyn LinearOracle,
    cfg: &SolverConfig,
) -> Result<NormSolution> {
    let (n, m) = (a.rows(), a.cols());
    if n == 0 || m == 0 || a.is_zero() {
        return Ok(NormSolution {
            value: 0.0,
            certificate_x: vec![0.0; n],
            certificate_y: Some(vec![0.0; m]),
            method: Method::Alternating,
            feasibility_slack: 0.0,
            upper: 0.0,
        });
    }
    let ys = starts(a, oy, cfg)?;
    let runs: Vec<Result<Run>> = cfg.exec.map(ys, |y0| alternate(a, ox, oy, y0, cfg, true));
    let mut best: Option<Run> = None;
    for run in runs {
        let run = run?;
        // strict comparison keeps the lowest start index on ties
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let polished = alternate(a, ox, oy, best.y.clone(), cfg, false)?;
    let best = if polished.value >= best.value { polished } else { best };
    if best.x.len() != n || best.y.len() != m {
        return Err(Error::Dimension(format!("certificates do not match a {n}x{m} matrix")));
    }
    let upper = upper_bound(a, ox, oy)?.max(best.value);
    Ok(NormSolution {
        value: best.value.max(0.0),
        certificate_x: best.x,
        certificate_y: Some(best.y),
        method: Method::Alternating,
        feasibility_slack: 0.0,
        upper,
    })
}

/// Relaxation bounds: both sets inside Euclidean balls gives
/// `ρ_X ρ_Y σ_max(A)`; with exact oracles also
/// `W_X(c)`, `c_i = W_Y(row_i)` and its transpose.
fn upper_bound(a: &CoeffMatrix, ox: &dyn LinearOracle, oy: &dyn LinearOracle) -> Result<f64> {
    let sigma = a.operator_norm_with(1e-12).0 * (1.0 + 1e-9);
    let mut ub = (ox.radius_sq(a.rows())? * oy.radius_sq(a.cols())?).sqrt() * sigma;
    if ox.exact() && oy.exact() {
        let c: Vec<f64> = (0..a.rows()).map(|i| oy.sup(a.row(i)).map(|s| s.value)).collect::<Result<_>>()?;
        ub = ub.min(ox.sup(&c)?.value);
        let at = a.transpose();
        let d: Vec<f64> = (0..at.rows()).map(|j| ox.sup(at.row(j)).map(|s| s.value)).collect::<Result<_>>()?;
        ub = ub.min(oy.sup(&d)?.value);
    }
    Ok(ub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionModel;

    fn b(p: f64, m: DistributionModel) -> ConstraintBudget {
        ConstraintBudget::new(p, m).unwrap()
    }

    #[test]
    fn square_tail_examples() {
        let st = DistributionModel::square_tail();
        let s = bilinear_norm(&CoeffMatrix::identity(2), &b(3.0, st.clone()), &b(3.0, st.clone())).unwrap();
        assert!((s.value - 3.0).abs() < 1e-10);
        let d = CoeffMatrix::dense(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = bilinear_norm(&d, &b(5.0, st.clone()), &b(5.0, st)).unwrap();
        assert!((s.value - 10.0).abs() < 1e-10);
        assert_eq!(s.value, s.upper);
    }

    #[test]
    fn rademacher_identity() {
        let rad = DistributionModel::rademacher();
        let s = bilinear_norm(&CoeffMatrix::identity(4), &b(2.0, rad.clone()), &b(2.0, rad)).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9, "{}", s.value);
        assert!((s.upper - 2.0).abs() < 1e-8);
    }

    #[test]
    fn lower_below_upper_for_gaussian() {
        let g = DistributionModel::gaussian();
        let a = CoeffMatrix::dense(vec![vec![1.0, -0.5, 0.2], vec![0.3, 2.0, 0.0]]).unwrap();
        let s = bilinear_norm(&a, &b(4.0, g.clone()), &b(4.0, g)).unwrap();
        assert!(s.value > 0.0 && s.value <= s.upper);
    }
}
