//! Exact supremum of a linear form over `{Σ t_i² <= p, |t_i| <= cap}`.
//!
//! KKT water-filling: `t_i = min(cap, |a_i| / λ)`. On magnitudes sorted
//! nonincreasingly the saturated set is a prefix, so the multiplier is found
//! exactly by scanning prefix lengths instead of iterating.

use super::{Method, NormSolution};

/// Magnitudes sorted nonincreasingly together with their original indices.
#[derive(Debug, Clone)]
pub(crate) struct Sorted {
    pub vals: Vec<f64>,
    pub idx: Vec<usize>,
    /// `suffix_sq[k] = Σ_{i>=k} vals[i]²`
    pub suffix_sq: Vec<f64>,
    /// `prefix[k] = Σ_{i<k} vals[i]`
    pub prefix: Vec<f64>,
}

impl Sorted {
    /// Stable sort, so among equal magnitudes the smallest index comes first
    /// and saturates first.
    pub fn new(a: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..a.len()).filter(|&i| a[i] != 0.0).collect();
        idx.sort_by(|&i, &j| a[j].abs().total_cmp(&a[i].abs()));
        let vals: Vec<f64> = idx.iter().map(|&i| a[i].abs()).collect();
        Self::from_parts(vals, idx)
    }

    pub fn from_parts(vals: Vec<f64>, idx: Vec<usize>) -> Self {
        let k = vals.len();
        let mut suffix_sq = vec![0.0; k + 1];
        for i in (0..k).rev() {
            suffix_sq[i] = suffix_sq[i + 1] + vals[i] * vals[i];
        }
        let mut prefix = vec![0.0; k + 1];
        for i in 0..k {
            prefix[i + 1] = prefix[i] + vals[i];
        }
        Self { vals, idx, suffix_sq, prefix }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    /// Water-filling on `vals[from..]`: returns `(value, saturated, rho)` where
    /// the first `saturated` entries sit at `cap` and the rest at `vals[i]·rho`.
    pub fn waterfill_from(&self, from: usize, budget: f64, cap: f64) -> (f64, usize, f64) {
        let k = self.len();
        if from >= k || budget <= 0.0 {
            return (0.0, from, 0.0);
        }
        if cap.is_finite() && (k - from) as f64 * cap * cap <= budget {
            return (cap * (self.prefix[k] - self.prefix[from]), k, 0.0);
        }
        for s in from..k {
            let rem = budget - (s - from) as f64 * cap * cap;
            let tail = self.suffix_sq[s];
            if tail <= 0.0 || rem <= 0.0 {
                return (cap * (self.prefix[s] - self.prefix[from]), s, 0.0);
            }
            let rho = (rem / tail).sqrt();
            if self.vals[s] * rho <= cap {
                let value = cap * (self.prefix[s] - self.prefix[from]) + (rem * tail).sqrt();
                return (value, s, rho);
            }
        }
        (cap * (self.prefix[k] - self.prefix[from]), k, 0.0)
    }

    pub fn waterfill_value(&self, from: usize, budget: f64, cap: f64) -> f64 {
        self.waterfill_from(from, budget, cap).0
    }

    /// Writes signed certificate entries for a water-filled block.
    pub fn fill_certificate(&self, a: &[f64], x: &mut [f64], from: usize, saturated: usize, rho: f64, cap: f64) {
        for k in from..self.len() {
            let t = if k < saturated { cap } else { self.vals[k] * rho };
            let i = self.idx[k];
            x[i] = t.copysign(a[i]);
        }
    }
}

/// `sup { Σ a_i t_i : Σ t_i² <= p, |t_i| <= cap }` with a maximizing `t`.
///
/// Signs of `a` are absorbed by the certificate; zero or empty input gives
/// value 0 and a zero certificate.
pub fn ell2_ellinf_sup(a: &[f64], p: f64, cap: f64) -> NormSolution {
    let sorted = Sorted::new(a);
    let mut x = vec![0.0; a.len()];
    if sorted.len() == 0 || p <= 0.0 || cap <= 0.0 {
        return NormSolution::linear(0.0, x, Method::KktExact, 0.0);
    }
    let (value, saturated, rho) = sorted.waterfill_from(0, p, cap);
    sorted.fill_certificate(a, &mut x, 0, saturated, rho, cap);
    let cost: f64 = x.iter().map(|t| t * t).sum();
    NormSolution::linear(value, x, Method::KktExact, (cost - p).max(0.0))
}
