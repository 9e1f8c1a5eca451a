//! Suprema over the two-branch budget `f(t) = t²` on `|t| <= 1`,
//! `f(t) = |t|^r` on `1 < |t| <= R`, `f = ∞` beyond (`R` may be infinite).
//!
//! With magnitudes sorted nonincreasingly an optimal point is sorted the same
//! way. Because `|t|^r` is concave for `r <= 1`, at most one coordinate sits
//! strictly between 1 and `R`; the others in the heavy block sit at `R`. So
//! the search is: `h` coordinates at `R` (enumerated exactly), one optional
//! partially filled heavy coordinate (1-D golden-section over its cost), and
//! a water-filled light block with cap 1 on whatever budget is left.

use super::water::Sorted;
use super::{Method, NormSolution};

const SCAN: usize = 64;
const GOLDEN_ITERS: usize = 80;

/// Cost of a single coordinate under the two-branch budget.
pub fn mixed_cost(t: f64, r: f64, cutoff: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        a * a
    } else if a <= cutoff {
        a.powf(r)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy)]
struct Plan {
    value: f64,
    heavy: usize,
    /// cost spent on the partial heavy coordinate (0 = none)
    partial_cost: f64,
}

/// `sup { Σ a_i t_i : Σ f(t_i) <= p }` for the two-branch budget.
pub fn mixed_budget_sup(a: &[f64], p: f64, r: f64, cutoff: f64) -> NormSolution {
    let sorted = Sorted::new(a);
    let mut x = vec![0.0; a.len()];
    let k = sorted.len();
    if k == 0 || p <= 0.0 {
        return NormSolution::linear(0.0, x, Method::KktExact, 0.0);
    }
    let heavy_unit = cutoff.powf(r);
    let h_max = if cutoff.is_finite() { ((p / heavy_unit).floor() as usize).min(k) } else { 0 };

    // h·R^r with 0·∞ = 0
    let heavy_cost = |h: usize| if h == 0 { 0.0 } else { h as f64 * heavy_unit };

    let mut best = Plan { value: f64::NEG_INFINITY, heavy: 0, partial_cost: 0.0 };
    let mut consider = |plan: Plan| {
        if plan.value > best.value {
            best = plan;
        }
    };
    for h in 0..=h_max {
        let budget = p - heavy_cost(h);
        if budget < -1e-12 * p {
            break;
        }
        let budget = budget.max(0.0);
        let top = if h == 0 { 0.0 } else { cutoff * sorted.prefix[h] };
        consider(Plan { value: top + sorted.waterfill_value(h, budget, 1.0), heavy: h, partial_cost: 0.0 });
        if h >= k || budget <= 1.0 {
            continue;
        }
        // partial heavy coordinate h with cost u ∈ (1, u_max]
        let u_max = budget.min(heavy_unit);
        let ah = sorted.vals[h];
        let g = |u: f64| ah * u.powf(1.0 / r) + sorted.waterfill_value(h + 1, budget - u, 1.0);
        let grid: Vec<f64> = (0..=SCAN).map(|i| 1.0 + (u_max - 1.0) * i as f64 / SCAN as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&u| g(u)).collect();
        let (ib, _) =
            vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let (mut lo, mut hi) = (grid[ib.saturating_sub(1)], grid[(ib + 1).min(SCAN)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let (mut fc, mut fd) = (g(c), g(d));
        for _ in 0..GOLDEN_ITERS {
            if fc >= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - phi * (hi - lo);
                fc = g(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + phi * (hi - lo);
                fd = g(d);
            }
        }
        for (u, v) in [(grid[ib], vals[ib]), (c, fc), (d, fd), (u_max, g(u_max))] {
            consider(Plan { value: top + v, heavy: h, partial_cost: u });
        }
    }

    let h = best.heavy;
    for kk in 0..h {
        let i = sorted.idx[kk];
        x[i] = cutoff.copysign(a[i]);
    }
    let mut light_from = h;
    let mut light_budget = (p - heavy_cost(h)).max(0.0);
    if best.partial_cost > 0.0 {
        let i = sorted.idx[h];
        let t = best.partial_cost.powf(1.0 / r).min(cutoff);
        x[i] = t.copysign(a[i]);
        light_from = h + 1;
        light_budget = (light_budget - best.partial_cost).max(0.0);
    }
    let (_, saturated, rho) = sorted.waterfill_from(light_from, light_budget, 1.0);
    sorted.fill_certificate(a, &mut x, light_from, saturated, rho, 1.0);
    let value: f64 = a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum();
    let cost: f64 = x.iter().map(|&t| mixed_cost(t, r, cutoff)).sum();
    NormSolution::linear(value, x, Method::KktExact, (cost - p).max(0.0))
}

/// `sup { Σ a_i t_i : Σ |t_i|^r <= p, |t_i| <= cap }` for `r <= 1`: the
/// largest coordinates are filled to `cap` in order, the next one takes the
/// remaining budget.
pub fn lr_box_sup(a: &[f64], p: f64, r: f64, cap: f64) -> NormSolution {
    let sorted = Sorted::new(a);
    let mut x = vec![0.0; a.len()];
    let mut left = p.max(0.0);
    let unit = cap.powf(r);
    for k in 0..sorted.len() {
        if left <= 0.0 {
            break;
        }
        let i = sorted.idx[k];
        let t = if unit <= left { cap } else { left.powf(1.0 / r) };
        left -= if unit <= left { unit } else { left };
        x[i] = t.copysign(a[i]);
    }
    let value: f64 = a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum();
    let cost: f64 = x.iter().map(|t| t.abs().powf(r)).sum();
    NormSolution::linear(value, x, Method::ClosedForm, (cost - p).max(0.0))
}

/// `sup Σ t_i²` over `{Σ |t_i|^r <= p, |t_i| <= cap}` (convex objective in
/// the cost variables, so the extreme greedy point is optimal).
pub fn lr_box_radius_sq(p: f64, r: f64, cap: f64, dim: usize) -> f64 {
    let unit = cap.powf(r);
    let full = if cap.is_finite() { ((p / unit).floor() as usize).min(dim) } else { 0 };
    let rem = (p - full as f64 * unit).max(0.0);
    let mut s = full as f64 * cap * cap;
    if full < dim {
        s += rem.powf(2.0 / r).min(cap * cap);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heavy_branch_infeasible_at_unit_budget() {
        let s = mixed_budget_sup(&[1.0, 0.0], 1.0, 0.5, 10.0);
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_heavy_coordinate() {
        let s = mixed_budget_sup(&[1.0, 0.0], 4.0, 1.0, 10.0);
        assert!((s.value - 4.0).abs() < 1e-9);
        let s = mixed_budget_sup(&[1.0, 0.0], 4.0, 0.5, f64::INFINITY);
        assert!((s.value - 16.0).abs() < 1e-9);
    }

    #[test]
    fn cutoff_caps_heavy_coordinates() {
        // R = 2, r = 1, p = 4: two coordinates at R cost 4 and give 2+2
        let s = mixed_budget_sup(&[1.0, 1.0], 4.0, 1.0, 2.0);
        assert!((s.value - 4.0).abs() < 1e-9);
        assert!(s.feasibility_slack <= 1e-9);
    }

    #[test]
    fn lr_box_greedy() {
        let s = lr_box_sup(&[3.0, 2.0, 1.0], 5.0, 1.0, 2.0);
        // 2 + 2 at cost 4, then 1 on the third coordinate
        assert!((s.value - (6.0 + 4.0 + 1.0)).abs() < 1e-12);
        assert_eq!(lr_box_radius_sq(5.0, 1.0, 2.0, 3), 9.0);
    }
}
