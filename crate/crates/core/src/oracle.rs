//! Brute-force ground truth for small instances.

use serde::Serialize;

use crate::coeffs::CoeffMatrix;
use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::par::Exec;

pub const MAX_SIGNS: usize = 24;
pub const MAX_GRID_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    /// Number of sign patterns or grid points examined.
    pub enumeration_size: u64,
    /// Grid step relative to the feasible box edge; 0 for exact enumeration.
    pub grid_resolution: f64,
    /// Certified upper end of the interval containing the true value.
    pub upper: f64,
}

/// `(2^{-k} Σ_σ |S(σ)|^p)^{1/p}` over all sign patterns, where `S` is
/// `σᵀAτ` (decoupled, `k = n + m`) or `σᵀAσ` (`k = n`).
pub fn rademacher_exact_moment(a: &CoeffMatrix, p: f64, decoupled: bool) -> Result<OracleResult> {
    rademacher_exact_moment_with(a, p, decoupled, Exec::default())
}

pub fn rademacher_exact_moment_with(a: &CoeffMatrix, p: f64, decoupled: bool, exec: Exec) -> Result<OracleResult> {
    let (n, m) = (a.rows(), a.cols());
    let k = if decoupled { n + m } else { n };
    if k > MAX_SIGNS {
        return Err(Error::SizeCap(format!("{k} sign variables, at most {MAX_SIGNS} allowed")));
    }
    if !decoupled && n != m {
        return Err(Error::Dimension(format!("undecoupled chaos needs a square matrix, got {n}x{m}")));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("moment order must be positive, got {p}")));
    }
    let size = 1u64 << k;
    // |S| <= Σ|a_ij|, so dividing by it keeps every power in [0, 1]
    let scale = a.sum_abs();
    if scale == 0.0 {
        return Ok(OracleResult { value: 0.0, enumeration_size: size, grid_resolution: 0.0, upper: 0.0 });
    }
    let signs =
        |mask: u64, len: usize| -> Vec<f64> { (0..len).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect() };
    let outer: Vec<u64> = (0..1u64 << n).collect();
    let partial: Vec<f64> = exec.map(outer, |mask| {
        let s = signs(mask, n);
        if decoupled {
            let u = a.mul_t_vec(&s);
            (0..1u64 << m)
                .map(|tm| {
                    let t = signs(tm, m);
                    let v: f64 = u.iter().zip(&t).map(|(x, y)| x * y).sum();
                    (v.abs() / scale).powf(p)
                })
                .sum::<f64>()
        } else {
            (a.bilinear(&s, &s).abs() / scale).powf(p)
        }
    });
    let mean = partial.iter().sum::<f64>() / size as f64;
    let value = scale * mean.powf(1.0 / p);
    Ok(OracleResult { value, enumeration_size: size, grid_resolution: 0.0, upper: value })
}

/// Largest `t` with `N̂(t) <= p`, by doubling then bisection; queries that
/// the model cannot answer count as infeasible.
pub fn feasible_edge(model: &DistributionModel, p: f64) -> f64 {
    let ok = |t: f64| model.nhat(t).map(|c| c <= p).unwrap_or(false);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ok(hi) && hi < 1e300 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

/// Nonnegative grid `k·h`, `k = 0..=K`, on `[0, T]` with per-point costs.
struct Grid {
    t: Vec<f64>,
    cost: Vec<f64>,
    h: f64,
}

impl Grid {
    fn new(model: &DistributionModel, p: f64, resolution: f64) -> Self {
        let edge = feasible_edge(model, p);
        let steps = (1.0 / resolution).ceil() as usize;
        let h = edge / steps as f64;
        let t: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
        let cost = t.iter().map(|&x| model.nhat(x).unwrap_or(f64::INFINITY)).collect();
        Self { t, cost, h }
    }

    /// Largest grid value with cost at most `budget`.
    fn best_within(&self, budget: f64) -> f64 {
        let k = self.cost.partition_point(|&c| c <= budget);
        if k == 0 {
            0.0
        } else {
            self.t[k - 1]
        }
    }
}

fn check_resolution(resolution: f64) -> Result<()> {
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::InvalidParameter(format!("grid resolution must be in (0, 0.5], got {resolution}")));
    }
    Ok(())
}

/// Grid search for `‖a‖_{X,p}`.
///
/// Signs are matched to `a` by symmetry, so only `[0, T]^n` is searched with
/// `T` the feasible edge and step `h = resolution·T`; the last coordinate
/// takes the largest grid value the leftover budget allows. Rounding any
/// feasible point down to the grid keeps it feasible, so the true value is
/// at most `best + ‖a‖₁·h`.
pub fn grid_norm_oracle(a: &[f64], model: &DistributionModel, p: f64, resolution: f64) -> Result<OracleResult> {
    check_resolution(resolution)?;
    let n = a.len();
    if n > MAX_GRID_DIM {
        return Err(Error::SizeCap(format!("grid oracle supports dimension <= {MAX_GRID_DIM}, got {n}")));
    }
    let w: Vec<f64> = a.iter().map(|v| v.abs()).collect();
    if n == 0 || w.iter().all(|&v| v == 0.0) {
        return Ok(OracleResult { value: 0.0, enumeration_size: 0, grid_resolution: resolution, upper: 0.0 });
    }
    let grid = Grid::new(model, p, resolution);
    let mut count = 0u64;
    let best = search(&grid, &w, 0, p, 0.0, &mut count);
    let l1: f64 = w.iter().sum();
    Ok(OracleResult { value: best, enumeration_size: count, grid_resolution: resolution, upper: best + l1 * grid.h })
}

fn search(grid: &Grid, w: &[f64], i: usize, budget: f64, acc: f64, count: &mut u64) -> f64 {
    if i + 1 == w.len() {
        *count += 1;
        return acc + w[i] * grid.best_within(budget);
    }
    let mut best = f64::NEG_INFINITY;
    for k in 0..grid.t.len() {
        let c = grid.cost[k];
        if c > budget {
            break;
        }
        best = best.max(search(grid, w, i + 1, budget - c, acc + w[i] * grid.t[k], count));
    }
    best
}

/// Grid search for `‖A‖_{X,Y,p}` with both sides of dimension at most 4.
///
/// `x_1..x_{n-1}` run over the signed grid (`x_1 >= 0` by the symmetry
/// `(x, y) → (−x, −y)`), `x_n` is pushed to `±` the largest feasible value
/// (the objective is linear in it), and the inner supremum over `y` is the
/// linear grid search applied to `Aᵀx`. The certified width is
/// `Σ|a_ij|·(h_x T_y + h_y T_x)`.
pub fn grid_bilinear_oracle(
    a: &CoeffMatrix,
    mx: &DistributionModel,
    px: f64,
    my: &DistributionModel,
    py: f64,
    resolution: f64,
) -> Result<OracleResult> {
    check_resolution(resolution)?;
    let (n, m) = (a.rows(), a.cols());
    if n > MAX_GRID_DIM || m > MAX_GRID_DIM {
        return Err(Error::SizeCap(format!("grid oracle supports dimension <= {MAX_GRID_DIM}, got {n}x{m}")));
    }
    if a.is_zero() || n == 0 || m == 0 {
        return Ok(OracleResult { value: 0.0, enumeration_size: 0, grid_resolution: resolution, upper: 0.0 });
    }
    let gx = Grid::new(mx, px, resolution);
    let gy = Grid::new(my, py, resolution);
    let edge_x = *gx.t.last().unwrap();
    let edge_y = *gy.t.last().unwrap();

    // enumerate the signed prefixes x_1..x_{n-1} together with their cost
    let mut prefixes: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 0.0)];
    for i in 0..n - 1 {
        let mut next = Vec::new();
        for (x, c) in &prefixes {
            for k in 0..gx.t.len() {
                let cc = c + gx.cost[k];
                if cc > px {
                    break;
                }
                let signs: &[f64] = if i == 0 || k == 0 { &[1.0] } else { &[1.0, -1.0] };
                for &s in signs {
                    let mut xv = x.clone();
                    xv.push(s * gx.t[k]);
                    next.push((xv, cc));
                }
            }
        }
        prefixes = next;
    }
    let count = prefixes.len() as u64 * 2;
    let values: Vec<f64> = Exec::default().map(prefixes, |(mut x, c)| {
        let last = gx.best_within(px - c);
        x.push(last);
        let mut best = f64::NEG_INFINITY;
        let sign_choices: &[f64] = if n == 1 { &[1.0] } else { &[1.0, -1.0] };
        for &s in sign_choices {
            x[n - 1] = s * last;
            let w: Vec<f64> = a.mul_t_vec(&x).iter().map(|v| v.abs()).collect();
            let mut inner = 0u64;
            let v = if w.iter().all(|&v| v == 0.0) { 0.0 } else { search(&gy, &w, 0, py, 0.0, &mut inner) };
            best = best.max(v);
        }
        best
    });
    let best = values.into_iter().fold(0.0, f64::max);
    let width = a.sum_abs() * (gx.h * edge_y + gy.h * edge_x);
    Ok(OracleResult { value: best, enumeration_size: count, grid_resolution: resolution, upper: best + width })
}
