//! Symmetric laws of the underlying variables.
//!
//! A [`DistributionModel`] knows its tail exponent `N(t) = -ln P(|X| >= t)`,
//! the hybrid budget function `N̂` (quadratic on `[-1, 1]`, the tail exponent
//! outside), how to sample itself, and how to compute its `L_q` norms by
//! quadrature on the tail representation `E|X|^q = ∫ q t^{q-1} P(|X| >= t) dt`.

mod config;

pub use config::ModelSpec;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{ln_erfc, log_add_exp};

/// Relative tolerance of every moment quadrature.
pub const MOMENT_REL_TOL: f64 = 1e-8;

/// Monotone table of `(t, N(t))` pairs, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTable {
    t: Vec<f64>,
    n: Vec<f64>,
}

impl TailTable {
    /// The table must start at the origin `(0, 0)` and be strictly
    /// increasing in both columns.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("tail table needs at least two points".into()));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::InvalidParameter(format!("tail table must start at (0, 0), got {:?}", points[0])));
        }
        for w in points.windows(2) {
            let ((t0, n0), (t1, n1)) = (w[0], w[1]);
            if !(t1 > t0 && n1 > n0) || !t1.is_finite() || !n1.is_finite() {
                return Err(Error::InvalidParameter(format!("tail table not strictly increasing at ({t1}, {n1})")));
            }
        }
        let (t, n) = points.into_iter().unzip();
        Ok(Self { t, n })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.n.iter().copied())
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    fn out_of_range(&self, t: f64) -> Error {
        Error::OutOfTable { t, lo: self.t[0], hi: self.t_max() }
    }

    fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= self.t[0] && u <= self.t_max()) {
            return Err(self.out_of_range(u));
        }
        let k = self.t.partition_point(|&x| x <= u).clamp(1, self.t.len() - 1);
        let (t0, t1, n0, n1) = (self.t[k - 1], self.t[k], self.n[k - 1], self.n[k]);
        Ok(n0 + (n1 - n0) * (u - t0) / (t1 - t0))
    }

    /// `sup { u : N(u) <= b }` on the interpolated table.
    fn inverse(&self, b: f64) -> Result<f64> {
        let n_max = *self.n.last().unwrap();
        if b >= n_max {
            return Err(Error::OutOfTable { t: f64::INFINITY, lo: self.t[0], hi: self.t_max() });
        }
        let k = self.n.partition_point(|&x| x <= b).clamp(1, self.n.len() - 1);
        let (t0, t1, n0, n1) = (self.t[k - 1], self.t[k], self.n[k - 1], self.n[k]);
        Ok(t0 + (t1 - t0) * (b - n0) / (n1 - n0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// Synthetic law with `N(t) = t^2` for every `t` (`|X| = sqrt(E)`, `E ~ Exp(1)`).
    SquareTail,
    Gaussian,
    Rademacher,
    /// Symmetric Weibull, `P(|X| >= t) = exp(-t^r)`, shape `r ∈ (0, 1]`.
    WeibullSym {
        r: f64,
    },
    /// `W·1{|W| <= R}` with `W` symmetric Weibull of shape `r`.
    TruncWeibullSym {
        r: f64,
        cutoff: f64,
    },
    CustomTail(TailTable),
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::SquareTail => "SquareTail",
            Kind::Gaussian => "Gaussian",
            Kind::Rademacher => "Rademacher",
            Kind::WeibullSym { .. } => "WeibullSym",
            Kind::TruncWeibullSym { .. } => "TruncWeibullSym",
            Kind::CustomTail(_) => "CustomTail",
        }
    }
}

/// A symmetric law plus a positive scale applied to samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionModel {
    kind: Kind,
    scale: f64,
}

impl DistributionModel {
    pub fn new(kind: Kind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        match &kind {
            Kind::WeibullSym { r } if !(*r > 0.0 && *r <= 1.0) => {
                return Err(Error::InvalidParameter(format!("Weibull shape must lie in (0, 1], got {r}")))
            }
            Kind::TruncWeibullSym { r, cutoff } => {
                if !(*r > 0.0 && *r <= 1.0) {
                    return Err(Error::InvalidParameter(format!("Weibull shape must lie in (0, 1], got {r}")));
                }
                if !(*cutoff > 1.0 && cutoff.is_finite()) {
                    return Err(Error::InvalidParameter(format!("cutoff must exceed 1, got {cutoff}")));
                }
            }
            _ => {}
        }
        Ok(Self { kind, scale })
    }

    pub fn square_tail() -> Self {
        Self { kind: Kind::SquareTail, scale: 1.0 }
    }

    pub fn gaussian() -> Self {
        Self { kind: Kind::Gaussian, scale: 1.0 }
    }

    pub fn rademacher() -> Self {
        Self { kind: Kind::Rademacher, scale: 1.0 }
    }

    pub fn weibull(r: f64) -> Result<Self> {
        Self::new(Kind::WeibullSym { r }, 1.0)
    }

    pub fn trunc_weibull(r: f64, cutoff: f64) -> Result<Self> {
        Self::new(Kind::TruncWeibullSym { r, cutoff }, 1.0)
    }

    pub fn custom(table: TailTable) -> Self {
        Self { kind: Kind::CustomTail(table), scale: 1.0 }
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.kind.clone(), scale)
    }

    /// Short label such as `WeibullSym(r=0.5)`.
    pub fn label(&self) -> String {
        let base = match &self.kind {
            Kind::WeibullSym { r } => format!("WeibullSym(r={r})"),
            Kind::TruncWeibullSym { r, cutoff } => format!("TruncWeibullSym(r={r},R={cutoff})"),
            k => k.name().to_string(),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{base}*{}", self.scale)
        }
    }

    /// Tail exponent of the unscaled law.
    fn raw_tail(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            Kind::SquareTail => u * u,
            Kind::Gaussian => -ln_erfc(u / std::f64::consts::SQRT_2),
            Kind::Rademacher => {
                if u <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::WeibullSym { r } => u.powf(*r),
            Kind::TruncWeibullSym { r, cutoff } => {
                if u >= *cutoff {
                    f64::INFINITY
                } else {
                    let ur = u.powf(*r);
                    ur - (-(ur - cutoff.powf(*r)).exp_m1()).ln()
                }
            }
            Kind::CustomTail(table) => table.eval(u)?,
        })
    }

    /// `sup { u >= 0 : N(u) <= b }` for the unscaled law.
    fn raw_tail_inverse(&self, b: f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::SquareTail => b.sqrt(),
            Kind::Rademacher => 1.0,
            Kind::WeibullSym { r } => b.powf(1.0 / r),
            Kind::TruncWeibullSym { r, cutoff } => {
                let rr = cutoff.powf(*r);
                let floor = -(-(-rr).exp()).ln_1p();
                if b < floor {
                    0.0
                } else {
                    let e = -log_add_exp(-b, -rr);
                    let mut u = e.max(0.0).powf(1.0 / r).min(*cutoff);
                    let mut step = 4.0 * f64::EPSILON;
                    while u > 0.0 && self.raw_tail(u)? > b {
                        u *= 1.0 - step;
                        step *= 2.0;
                    }
                    u
                }
            }
            Kind::Gaussian => gaussian_tail_inverse(b),
            Kind::CustomTail(table) => table.inverse(b)?,
        })
    }

    /// `N(t) = -ln P(|X| >= t)` including the scale; `+∞` for a zero tail.
    pub fn tail_exponent(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("tail query needs t >= 0, got {t}")));
        }
        self.raw_tail(t / self.scale)
    }

    pub fn tail_prob(&self, t: f64) -> Result<f64> {
        Ok((-self.tail_exponent(t)?).exp())
    }

    /// `N̂(t)`: `t²` for `|t| <= 1`, the tail exponent of `|t|` beyond.
    pub fn nhat(&self, t: f64) -> Result<f64> {
        let a = t.abs();
        if a <= 1.0 {
            Ok(a * a)
        } else {
            self.tail_exponent(a)
        }
    }

    /// Largest `t >= 0` with `N̂(t) <= b`; the value a single coordinate can
    /// reach when given budget `b`.
    pub fn nhat_inverse(&self, b: f64) -> Result<f64> {
        if !(b >= 0.0) {
            return Err(Error::InvalidParameter(format!("budget must be nonnegative, got {b}")));
        }
        let quad = b.sqrt().min(1.0);
        let heavy = self.scale * self.raw_tail_inverse(b)?;
        Ok(if heavy > 1.0 { heavy.max(quad) } else { quad })
    }

    /// Points (in `t`) where the tail exponent is not smooth.
    fn tail_breaks(&self) -> Vec<f64> {
        let s = self.scale;
        match &self.kind {
            Kind::Rademacher => vec![s],
            Kind::TruncWeibullSym { cutoff, .. } => vec![s * cutoff],
            Kind::CustomTail(table) => table.t.iter().skip(1).map(|t| s * t).collect(),
            _ => vec![],
        }
    }

    /// `ln E g(|X|)` for a nondecreasing `g` with `g(0) = g0`, given
    /// `ln g'(u)` as a function of `(u, ln u)`.
    ///
    /// Uses `E g(|X|) = g(0) + ∫ g'(u) P(|X| >= u) du` in the variable
    /// `v = ln u`, shifted by the peak of the integrand so that huge moments
    /// stay representable.
    pub fn log_expect_increasing<G>(&self, g0: f64, ln_gprime: G, extra_breaks: &[f64]) -> Result<f64>
    where
        G: Fn(f64, f64) -> f64,
    {
        let phi = |v: f64| -> Result<f64> {
            let u = v.exp();
            let n = self.tail_exponent(u)?;
            if n == f64::INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            let lg = ln_gprime(u, v);
            Ok(lg + v - n)
        };
        let ls = self.scale.ln();
        let v_top = match &self.kind {
            Kind::CustomTail(t) => (t.t_max() * self.scale).ln(),
            _ => ls + 60.0,
        };
        let step = 0.05;
        let mut v = ls - 60.0;
        let mut best = f64::NEG_INFINITY;
        let mut grid = Vec::with_capacity(4096);
        while v <= v_top {
            let f = phi(v)?;
            grid.push((v, f));
            best = best.max(f);
            // stop once past the peak and the integrand has died out
            if best.is_finite() && f < best - 80.0 && grid.len() > 2 && grid[grid.len() - 2].1 >= f {
                break;
            }
            v += step;
        }
        let ln_g0 = if g0 > 0.0 { g0.ln() } else { f64::NEG_INFINITY };
        if best == f64::NEG_INFINITY {
            return Ok(ln_g0);
        }
        if let Kind::CustomTail(_) = self.kind {
            if let Some(&(_, f_end)) = grid.last() {
                if grid.last().unwrap().0 + step > v_top && f_end > best - 40.0 {
                    return Err(Error::Quadrature("tail table ends before the integrand decays".into()));
                }
            }
        }
        let cut = best - 70.0;
        let first = grid.iter().position(|&(_, f)| f >= cut).unwrap();
        let last = grid.iter().rposition(|&(_, f)| f >= cut).unwrap();
        let lo = grid[first.saturating_sub(2)].0;
        let hi = (grid[(last + 2).min(grid.len() - 1)].0).min(v_top);
        let mut breaks: Vec<f64> = self
            .tail_breaks()
            .into_iter()
            .chain(extra_breaks.iter().copied())
            .filter(|&t| t > 0.0)
            .map(f64::ln)
            .collect();
        breaks.sort_by(|a, b| a.total_cmp(b));
        let failure = std::cell::RefCell::new(None);
        let integral = quad::integrate_pieces(
            |v| match phi(v) {
                Ok(f) => (f - best).exp(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            &breaks,
            MOMENT_REL_TOL * 1e-2,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(log_add_exp(ln_g0, best + integral.ln()))
    }

    /// `ln E|X|^q`.
    pub fn log_moment(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("moment order must be positive, got {q}")));
        }
        let lq = q.ln();
        self.log_expect_increasing(0.0, |_, v| lq + (q - 1.0) * v, &[])
    }

    /// `‖X‖_q = (E|X|^q)^{1/q}`.
    pub fn moment_lp(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("moment order must be >= 1, got {q}")));
        }
        Ok((self.log_moment(q)? / q).exp())
    }

    /// `α = max ‖X‖_{2p} / ‖X‖_p` over the grid and `d = ⌈log₂ α⌉`.
    pub fn alpha_estimate(&self, p_grid: &[f64]) -> Result<(f64, u32)> {
        let mut alpha: f64 = 1.0;
        for &p in p_grid {
            let ratio = ((self.log_moment(2.0 * p)? / (2.0 * p)) - (self.log_moment(p)? / p)).exp();
            alpha = alpha.max(ratio);
        }
        let d = if alpha <= 1.0 + 1e-9 { 0 } else { alpha.log2().ceil().max(0.0) as u32 };
        Ok((alpha, d))
    }

    /// Checks `ln P(|X| >= K t x) <= t^β ln P(|X| >= x)` on the grids.
    pub fn check_tail_growth(&self, k: f64, beta: f64, t_grid: &[f64], x_grid: &[f64]) -> Result<bool> {
        for &t in t_grid {
            for &x in x_grid {
                let lhs = self.tail_exponent(k * t * x)?;
                if lhs == f64::INFINITY {
                    continue;
                }
                let rhs = t.powf(beta) * self.tail_exponent(x)?;
                if lhs < rhs * (1.0 - 1e-12) - 1e-12 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Draws one `|X|` of the unscaled law.
    fn draw_abs<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::SquareTail => {
                let e: f64 = Exp1.sample(rng);
                e.sqrt()
            }
            Kind::Gaussian => {
                let g: f64 = StandardNormal.sample(rng);
                g.abs()
            }
            Kind::Rademacher => 1.0,
            Kind::WeibullSym { r } => {
                let e: f64 = Exp1.sample(rng);
                e.powf(1.0 / r)
            }
            Kind::TruncWeibullSym { r, cutoff } => {
                let e: f64 = Exp1.sample(rng);
                let w = e.powf(1.0 / r);
                if w > *cutoff {
                    0.0
                } else {
                    w
                }
            }
            Kind::CustomTail(table) => {
                // mass beyond the last row is placed on the last row
                let e: f64 = Exp1.sample(rng);
                table.inverse(e).unwrap_or_else(|_| table.t_max())
            }
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.draw_abs(rng) * self.scale;
        if rng.random::<bool>() {
            a
        } else {
            -a
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.sample_one(rng);
        }
    }

    /// `count` i.i.d. draws from the caller's stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count];
        self.sample_into(rng, &mut out);
        out
    }

    /// Rescales so that `‖X‖₂ = 1/e`.
    pub fn normalize_to_class(&self) -> Result<Self> {
        let m2 = self.moment_lp(2.0)?;
        self.with_scale(self.scale * (-1.0f64).exp() / m2)
    }
}

/// Geometric grid of `count` points from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { hi } else { lo * (ratio * i as f64).exp() }).collect()
}

/// The default `α` grid: 64 geometric points on `[1, 256]`.
pub fn default_alpha_grid() -> Vec<f64> {
    geometric_grid(1.0, 256.0, 64)
}

fn gaussian_tail_inverse(b: f64) -> f64 {
    let n = |u: f64| -ln_erfc(u / std::f64::consts::SQRT_2);
    if b <= 0.0 {
        return 0.0;
    }
    let mut u = if b < 600.0 {
        std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv((-b).exp())
    } else {
        (2.0 * b).sqrt()
    };
    // Newton on N(u) = b; N'(u) = sqrt(2/pi) exp(N(u) - u^2/2)
    for _ in 0..4 {
        let nu = n(u);
        let d = (2.0 / std::f64::consts::PI).sqrt() * (nu - 0.5 * u * u).exp();
        if !(d > 0.0 && d.is_finite()) {
            break;
        }
        let next = u - (nu - b) / d;
        if !(next > 0.0) {
            break;
        }
        u = next;
    }
    let mut step = 4.0 * f64::EPSILON;
    while u > 0.0 && n(u) > b {
        u *= 1.0 - step;
        step *= 2.0;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tail_exponent_examples() {
        let w1 = DistributionModel::weibull(1.0).unwrap();
        assert!((w1.tail_exponent(2.0).unwrap() - 2.0).abs() < 1e-15);
        let rad = DistributionModel::rademacher();
        assert_eq!(rad.tail_exponent(0.5).unwrap(), 0.0);
        assert_eq!(rad.tail_exponent(1.5).unwrap(), f64::INFINITY);
        assert_eq!(DistributionModel::square_tail().tail_exponent(3.0).unwrap(), 9.0);
    }

    #[test]
    fn nhat_examples() {
        let w = DistributionModel::weibull(0.5).unwrap();
        assert_eq!(w.nhat(0.5).unwrap(), 0.25);
        assert!((w.nhat(4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((w.nhat(-4.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(DistributionModel::rademacher().nhat(2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn scale_is_inverted_in_tail_queries() {
        let w = DistributionModel::weibull(1.0).unwrap().with_scale(2.0).unwrap();
        assert!((w.tail_exponent(4.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(DistributionModel::weibull(1.5).is_err());
        assert!(DistributionModel::trunc_weibull(0.5, 1.0).is_err());
        assert!(DistributionModel::gaussian().with_scale(0.0).is_err());
        assert!(DistributionModel::gaussian().with_scale(-1.0).is_err());
        assert!(TailTable::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(TailTable::new(vec![(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn custom_table_out_of_range_is_error() {
        let m = DistributionModel::custom(TailTable::new(vec![(0.0, 0.0), (1.0, 1.0), (3.0, 5.0)]).unwrap());
        assert!((m.tail_exponent(2.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(m.tail_exponent(3.5), Err(Error::OutOfTable { .. })));
    }

    #[test]
    fn moment_examples() {
        let rad = DistributionModel::rademacher();
        for q in [1.0, 2.5, 7.0] {
            assert!((rad.moment_lp(q).unwrap() - 1.0).abs() < 1e-9);
        }
        let g = DistributionModel::gaussian();
        assert!((g.moment_lp(2.0).unwrap() - 1.0).abs() < 1e-8);
        let w = DistributionModel::weibull(1.0).unwrap();
        assert!((w.moment_lp(2.0).unwrap() - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn nhat_inverse_is_sup_of_feasible() {
        for m in [
            DistributionModel::square_tail(),
            DistributionModel::gaussian(),
            DistributionModel::rademacher(),
            DistributionModel::weibull(0.5).unwrap(),
            DistributionModel::trunc_weibull(0.5, 4.0).unwrap(),
        ] {
            for b in [0.0, 0.3, 1.0, 1.1, 2.0, 5.0, 40.0] {
                let t = m.nhat_inverse(b).unwrap();
                assert!(m.nhat(t).unwrap() <= b * (1.0 + 1e-12) + 1e-15, "{m:?} b={b} t={t}");
                let bumped = t * (1.0 + 1e-6) + 1e-9;
                assert!(m.nhat(bumped).unwrap() > b, "{m:?} b={b} t={t} not maximal");
            }
        }
    }

    #[test]
    fn samples_respect_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rad = DistributionModel::rademacher().sample(&mut rng, 10);
        assert!(rad.iter().all(|&x| x == 1.0 || x == -1.0));
        let tw = DistributionModel::trunc_weibull(1.0, 3.0).unwrap().sample(&mut rng, 10_000);
        assert!(tw.iter().all(|x| x.abs() <= 3.0));
    }

    #[test]
    fn normalize_examples() {
        let e = std::f64::consts::E;
        let r = DistributionModel::rademacher().normalize_to_class().unwrap();
        assert!((r.scale() - 1.0 / e).abs() < 1e-9);
        let w = DistributionModel::weibull(1.0).unwrap().normalize_to_class().unwrap();
        assert!((w.scale() - 1.0 / (e * 2f64.sqrt())).abs() < 1e-9);
        assert!((w.moment_lp(2.0).unwrap() - 1.0 / e).abs() < 1e-8);
    }
}
