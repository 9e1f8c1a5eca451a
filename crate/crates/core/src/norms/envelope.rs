//! Two-sided closed-form estimates of `‖a‖_{X,p}` for the catalog models.

use super::mixed::lr_box_sup;
use super::water::ell2_ellinf_sup;
use super::ConstraintBudget;
use crate::coeffs::{l2, nonincreasing_rearrangement};
use crate::distributions::Kind;
use crate::error::{Error, Result};

/// `(lower, upper)` with `lower <= ‖a‖_{X,p} <= upper`.
///
/// * SquareTail: `√p‖a‖₂` on both sides.
/// * Rademacher: `[F/2, F]`, `F = Σ_{i<=p} a*_i + √p (Σ_{i>p} a*_i²)^{1/2}`.
/// * WeibullSym(r): `[G/2, G]`, `G = √p‖a‖₂ + p^{1/r}‖a‖_∞`.
/// * TruncWeibullSym(r, R): the light part `sup{Σ a t : Σ t² <= p, |t| <= 1}`
///   plus the heavy part `sup{Σ a t : Σ |t|^r <= p, |t| <= R}` bounds from
///   above; half the light part plus `a*_1 N̂⁻¹(p)` bounds from below.
/// * Gaussian: `[√p‖a‖₂ / √N(1), √(2p)‖a‖₂]`.
pub fn linear_norm_envelope(a: &[f64], budget: &ConstraintBudget) -> Result<(f64, f64)> {
    let p = budget.p;
    let model = &budget.model;
    if model.scale() != 1.0 {
        return Err(Error::Unsupported(format!("envelope needs unit scale, got {}", model.scale())));
    }
    let norm2 = l2(a);
    let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(match model.kind() {
        Kind::SquareTail => (p.sqrt() * norm2, p.sqrt() * norm2),
        Kind::Rademacher => {
            let f = rademacher_f(a, p);
            (0.5 * f, f)
        }
        Kind::WeibullSym { r } => {
            let g = p.sqrt() * norm2 + p.powf(1.0 / r) * amax;
            (0.5 * g, g)
        }
        Kind::TruncWeibullSym { r, cutoff } => {
            let light = ell2_ellinf_sup(a, p, 1.0).value;
            let heavy = lr_box_sup(a, p, *r, *cutoff).value;
            let single = amax * model.nhat_inverse(p)?;
            (0.5 * (light + single), light + heavy)
        }
        Kind::Gaussian => {
            let n1 = model.tail_exponent(1.0)?;
            (p.sqrt() * norm2 / n1.max(1.0).sqrt(), (2.0 * p).sqrt() * norm2)
        }
        Kind::CustomTail(_) => return Err(Error::Unsupported("no closed form for CustomTail".into())),
    })
}

/// `Σ_{i<=p} a*_i + √p·(Σ_{i>p} a*_i²)^{1/2}` with `i` counted from 1.
pub fn rademacher_f(a: &[f64], p: f64) -> f64 {
    let s = nonincreasing_rearrangement(a);
    let k = (p.floor() as usize).min(s.len());
    let head: f64 = s[..k].iter().sum();
    let tail: f64 = s[k..].iter().map(|v| v * v).sum();
    head + p.sqrt() * tail.sqrt()
}
