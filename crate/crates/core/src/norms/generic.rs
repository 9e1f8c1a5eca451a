//! Generic solver for `sup { Σ a_i x_i : Σ N̂(x_i) <= p }` when no exact
//! per-model solver applies.
//!
//! Writing `ψ(b) = sup { t : N̂(t) <= b }`, the problem is the separable
//! resource allocation `max Σ |a_i| ψ(b_i)` subject to `Σ b_i <= p`. `ψ` is
//! tabulated once per budget and replaced by its upper concave envelope; the
//! envelope problem is solved exactly through its dual (bisection on the
//! multiplier λ, each coordinate picking the envelope vertex where the slope
//! crosses `λ / |a_i|`). The allocation is then evaluated with the true `ψ`
//! (always feasible) and improved by pairwise budget exchanges.

use super::water::Sorted;
use super::{Method, NormSolution};
use crate::distributions::DistributionModel;
use crate::error::Result;

const GRID: usize = 400;
const PAIR_SCAN: usize = 32;
const GOLDEN_ITERS: usize = 60;
const REFINE_PASSES: usize = 4;
const FULL_PAIRS_MAX: usize = 12;

/// A budget `{Σ N̂(x_i) <= p}` with its tabulated concave envelope.
#[derive(Debug, Clone)]
pub struct PreparedBudget {
    model: DistributionModel,
    p: f64,
    /// Envelope vertices `(b, ψ(b))`, `b` increasing from 0 to `p`.
    hull: Vec<(f64, f64)>,
    /// `hull` segment slopes, nonincreasing.
    slopes: Vec<f64>,
    bisect_tol: f64,
}

impl PreparedBudget {
    pub fn new(model: &DistributionModel, p: f64, bisect_tol: f64) -> Result<Self> {
        let mut bs: Vec<f64> = Vec::with_capacity(2 * GRID + 8);
        bs.push(0.0);
        for i in 1..=GRID {
            bs.push(p * i as f64 / GRID as f64);
            bs.push(p * (1e-6f64).powf(1.0 - i as f64 / GRID as f64));
        }
        // budgets where ψ may jump: N̂ just above 1 and at 1
        for t in [1.0, 1.0 + 1e-9] {
            let b = model.nhat(t)?;
            if b.is_finite() && b < p {
                bs.push(b);
            }
        }
        bs.retain(|&b| b <= p);
        bs.sort_by(|a, b| a.total_cmp(b));
        bs.dedup();
        let mut pts = Vec::with_capacity(bs.len());
        for &b in &bs {
            pts.push((b, model.nhat_inverse(b)?));
        }
        let hull = upper_hull(&pts);
        let slopes = hull.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        Ok(Self { model: model.clone(), p, hull, slopes, bisect_tol })
    }

    pub fn model(&self) -> &DistributionModel {
        &self.model
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn psi(&self, b: f64) -> f64 {
        self.model.nhat_inverse(b.max(0.0)).unwrap_or(0.0)
    }

    fn cost(&self, x: f64) -> f64 {
        self.model.nhat(x).unwrap_or(f64::INFINITY)
    }

    /// Envelope vertex chosen by a coordinate of weight `w` at multiplier λ:
    /// the first vertex after which every slope is `<= λ / w`.
    fn vertex_for(&self, w: f64, lambda: f64) -> usize {
        let thr = lambda / w;
        self.slopes.partition_point(|&s| s > thr)
    }

    /// Exact solution of the envelope problem: budgets per sorted coordinate.
    fn envelope_allocation(&self, vals: &[f64]) -> Vec<f64> {
        let k = vals.len();
        let last = self.hull.len() - 1;
        let total = |lambda: f64| -> f64 { vals.iter().map(|&w| self.hull[self.vertex_for(w, lambda)].0).sum() };
        if total(0.0) <= self.p {
            return vec![self.hull[last].0; k];
        }
        let smax = self.slopes.first().copied().unwrap_or(0.0);
        let mut hi = vals[0] * smax * 2.0 + 1e-300;
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) <= self.p {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= self.bisect_tol * hi {
                break;
            }
        }
        let at_hi: Vec<usize> = vals.iter().map(|&w| self.vertex_for(w, hi)).collect();
        let at_lo: Vec<usize> = vals.iter().map(|&w| self.vertex_for(w, lo)).collect();
        let mut b: Vec<f64> = at_hi.iter().map(|&v| self.hull[v].0).collect();
        let mut left = self.p - b.iter().sum::<f64>();
        // coordinates tied at the critical multiplier fill in index order
        for i in 0..k {
            if left <= 0.0 {
                break;
            }
            let target = self.hull[at_lo[i]].0;
            let add = (target - b[i]).min(left).max(0.0);
            b[i] += add;
            left -= add;
        }
        b
    }

    fn value_of(&self, vals: &[f64], b: &[f64]) -> f64 {
        vals.iter().zip(b).map(|(&w, &bi)| w * self.psi(bi)).sum()
    }

    /// Best split of `total` between two coordinates of weights `wi`, `wj`.
    fn best_split(&self, wi: f64, wj: f64, total: f64, current: f64) -> (f64, f64) {
        let f = |s: f64| wi * self.psi(s) + wj * self.psi(total - s);
        let mut best = (current, f(current));
        let grid: Vec<f64> = (0..=PAIR_SCAN).map(|i| total * i as f64 / PAIR_SCAN as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
        let ib = (0..grid.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
        if vals[ib] > best.1 {
            best = (grid[ib], vals[ib]);
        }
        let (mut lo, mut hi) = (grid[ib.saturating_sub(1)], grid[(ib + 1).min(PAIR_SCAN)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..GOLDEN_ITERS {
            if fc >= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - phi * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + phi * (hi - lo);
                fd = f(d);
            }
        }
        for (s, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (s, v);
            }
        }
        best
    }

    /// Pairwise exchanges plus redistribution of unused budget.
    fn refine(&self, vals: &[f64], b: &mut [f64]) {
        self.refine_passes(vals, b, REFINE_PASSES);
    }

    /// `passes = 0` only redistributes unused budget once.
    fn refine_passes(&self, vals: &[f64], b: &mut [f64], passes: usize) {
        let k = vals.len();
        for pass in 0..passes.max(1) {
            let mut improved = false;
            // shrink budgets to what the evaluated points actually use
            let mut used = 0.0;
            for bi in b.iter_mut().take(k) {
                *bi = self.cost(self.psi(*bi)).min(*bi);
                used += *bi;
            }
            let spare = self.p - used;
            if spare > 1e-15 * self.p {
                let (mut bi, mut gain) = (usize::MAX, 0.0);
                for i in 0..k {
                    let g = vals[i] * (self.psi(b[i] + spare) - self.psi(b[i]));
                    if g > gain {
                        gain = g;
                        bi = i;
                    }
                }
                if bi != usize::MAX {
                    b[bi] += spare;
                    improved = true;
                }
            }
            if passes == 0 {
                break;
            }
            let _ = pass;
            let pairs: Vec<(usize, usize)> = if k <= FULL_PAIRS_MAX {
                (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
            } else {
                (0..k - 1).map(|i| (i, i + 1)).chain((1..k).map(|j| (0, j))).collect()
            };
            for (i, j) in pairs {
                let total = b[i] + b[j];
                if total <= 0.0 {
                    continue;
                }
                let before = vals[i] * self.psi(b[i]) + vals[j] * self.psi(b[j]);
                let (s, v) = self.best_split(vals[i], vals[j], total, b[i]);
                if v > before * (1.0 + 1e-13) {
                    b[i] = s;
                    b[j] = (total - s).max(0.0);
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }

    pub fn solve(&self, a: &[f64]) -> NormSolution {
        self.solve_opts(a, true)
    }

    /// Envelope allocation only, with unused budget handed to the best
    /// coordinate; used inside iterative solvers where `solve` is too slow.
    pub fn solve_fast(&self, a: &[f64]) -> NormSolution {
        self.solve_opts(a, false)
    }

    fn solve_opts(&self, a: &[f64], polish: bool) -> NormSolution {
        let sorted = Sorted::new(a);
        let k = sorted.len();
        if k == 0 || self.p <= 0.0 {
            return NormSolution::linear(0.0, vec![0.0; a.len()], Method::DualNumeric, 0.0);
        }
        let vals = &sorted.vals;
        let mut candidates: Vec<Vec<f64>> = vec![self.envelope_allocation(vals)];
        if !polish {
            let mut b = candidates.pop().unwrap();
            self.refine_passes(vals, &mut b, 0);
            return self.finish(a, &sorted, &b);
        }
        let mut single = vec![0.0; k];
        single[0] = self.p;
        candidates.push(single);
        // light-only start: quadratic budgets with unit caps
        let (_, sat, rho) = sorted.waterfill_from(0, self.p, 1.0);
        candidates.push((0..k).map(|i| if i < sat { 1.0 } else { (vals[i] * rho).powi(2) }).collect());

        let mut best: Option<(f64, Vec<f64>)> = None;
        for mut b in candidates {
            self.refine(vals, &mut b);
            let v = self.value_of(vals, &b);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, b));
            }
        }
        let (_, b) = best.unwrap();
        self.finish(a, &sorted, &b)
    }

    fn finish(&self, a: &[f64], sorted: &Sorted, b: &[f64]) -> NormSolution {
        let mut x = vec![0.0; a.len()];
        let k = sorted.len();
        for (&i, &bk) in sorted.idx.iter().zip(b).take(k) {
            x[i] = self.psi(bk).copysign(a[i]);
        }
        let value: f64 = a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum();
        let cost: f64 = x.iter().map(|&t| self.cost(t)).sum();
        NormSolution::linear(value, x, Method::DualNumeric, (cost - self.p).max(0.0))
    }

    /// Upper bound on `sup x_i²` ratio: `sup_{0<b<=p} ψ(b)² / b`, bounded on a
    /// geometric grid by `ψ(b_{k+1})² / b_k`.
    pub fn radius_sq_bound(&self) -> f64 {
        let b0 = (self.p * 1e-9).min(1e-9);
        let psi0 = self.psi(b0);
        // below b0 the heavy branch is inactive when ψ(b0) is the quadratic one
        let mut ratio: f64 = if (psi0 * psi0 - b0).abs() <= 1e-12 * b0 { 1.0 } else { f64::INFINITY };
        let steps = 4000;
        let g = (self.p / b0).ln() / steps as f64;
        let mut prev = b0;
        for i in 1..=steps {
            let b = if i == steps { self.p } else { b0 * (g * i as f64).exp() };
            let t = self.psi(b);
            ratio = ratio.max(t * t / prev);
            prev = b;
        }
        ratio * self.p
    }
}

/// Upper concave hull of points sorted by `x` (monotone chain).
fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h
}
