//! Deterministic moment and tail estimates assembled from the norms.
//!
//! For independent symmetric sequences `X`, `Y` the decoupled chaos
//! `S = Σ a_ij X_i Y_j` satisfies `‖S‖_p ≍ ‖A‖_{X,Y,p} + ‖(‖col_j‖₂)‖_{Y,p} +
//! ‖(‖row_i‖₂)‖_{X,p}` with constants depending only on the moment-growth
//! class; the undecoupled chaos with symmetric zero-diagonal `A` keeps the
//! bilinear term over `X, X` and one row term.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coeffs::{nonincreasing_rearrangement, CoeffMatrix};
use crate::distributions::{DistributionModel, Kind};
use crate::error::{Error, Result};
use crate::norms::{
    bilinear_norm, bilinear_norm_with, linear_norm, rademacher_f, ConstraintBudget, L2BoxOracle, LrBoxOracle, Method,
    SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Decoupled,
    Undecoupled,
    Gaussian,
    Rademacher,
    Weibull,
    TruncWeibull,
}

impl Form {
    pub const ALL: [Form; 6] =
        [Form::Decoupled, Form::Undecoupled, Form::Gaussian, Form::Rademacher, Form::Weibull, Form::TruncWeibull];

    pub fn name(self) -> &'static str {
        match self {
            Form::Decoupled => "decoupled",
            Form::Undecoupled => "undecoupled",
            Form::Gaussian => "gaussian",
            Form::Rademacher => "rademacher",
            Form::Weibull => "weibull",
            Form::TruncWeibull => "truncweibull",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Form::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::Config(format!("unknown bound form `{s}`")))
    }
}

/// One evaluated bound.
///
/// For the norm forms the terms are the bilinear norm, the norm of the row
/// lengths and the norm of the column lengths. For the closed forms the
/// operator-type part of the formula is reported as `bilinear_term` and the
/// row-length part as `row_term`, with `col_term = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub form: Form,
    pub p: f64,
    pub bilinear_term: f64,
    /// Relaxation upper bound for the bilinear term.
    pub bilinear_upper: f64,
    pub row_term: f64,
    pub col_term: f64,
    pub total: f64,
    pub bilinear_method: Method,
    pub row_method: Method,
    pub col_method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationPack>,
}

impl BoundReport {
    fn closed(form: Form, p: f64, bilinear: f64, bilinear_upper: f64, row: f64, method: Method) -> Self {
        Self {
            form,
            p,
            bilinear_term: bilinear,
            bilinear_upper,
            row_term: row,
            col_term: 0.0,
            total: bilinear + row,
            bilinear_method: method,
            row_method: Method::ClosedForm,
            col_method: None,
            calibration: None,
        }
    }

    /// `total` with the bilinear term replaced by its upper bound.
    pub fn total_upper(&self) -> f64 {
        self.total - self.bilinear_term + self.bilinear_upper
    }

    pub fn method_tags(&self) -> String {
        let mut s = format!("{}|{}", self.bilinear_method.name(), self.row_method.name());
        if let Some(c) = self.col_method {
            s.push('|');
            s.push_str(c.name());
        }
        s
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("moment order p must be a finite value >= 1, got {p}")));
    }
    Ok(())
}

fn check_chaos(a: &CoeffMatrix, what: &str) -> Result<()> {
    if !a.is_symmetric() || !a.is_zero_diag() {
        return Err(Error::Flags(format!("{what} needs a matrix flagged symmetric and zero-diagonal")));
    }
    Ok(())
}

/// `‖A‖_{X,Y,p} + ‖(‖col_j‖₂)_j‖_{Y,p} + ‖(‖row_i‖₂)_i‖_{X,p}`.
pub fn decoupled_moment_bound(
    a: &CoeffMatrix,
    mx: &DistributionModel,
    my: &DistributionModel,
    p: f64,
) -> Result<BoundReport> {
    check_p(p)?;
    let bx = ConstraintBudget::new(p, mx.clone())?;
    let by = ConstraintBudget::new(p, my.clone())?;
    let bil = bilinear_norm(a, &bx, &by)?;
    let row = linear_norm(&a.row_l2_norms(), &bx)?;
    let col = linear_norm(&a.col_l2_norms(), &by)?;
    Ok(BoundReport {
        form: Form::Decoupled,
        p,
        bilinear_term: bil.value,
        bilinear_upper: bil.upper,
        row_term: row.value,
        col_term: col.value,
        total: bil.value + row.value + col.value,
        bilinear_method: bil.method,
        row_method: row.method,
        col_method: Some(col.method),
        calibration: None,
    })
}

/// `‖A‖_{X,X,p} + ‖(‖row_i‖₂)_i‖_{X,p}` for symmetric zero-diagonal `A`.
pub fn undecoupled_moment_bound(a: &CoeffMatrix, model: &DistributionModel, p: f64) -> Result<BoundReport> {
    check_p(p)?;
    check_chaos(a, "the undecoupled bound")?;
    let b = ConstraintBudget::new(p, model.clone())?;
    let bil = bilinear_norm(a, &b, &b)?;
    let row = linear_norm(&a.col_l2_norms(), &b)?;
    Ok(BoundReport {
        form: Form::Undecoupled,
        p,
        bilinear_term: bil.value,
        bilinear_upper: bil.upper,
        row_term: row.value,
        col_term: 0.0,
        total: bil.value + row.value,
        bilinear_method: bil.method,
        row_method: row.method,
        col_method: None,
        calibration: None,
    })
}

/// Empirical surrogates for the unspecified constants of the two-sided
/// estimates, fitted by `montecarlo::calibrate_constants`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPack {
    pub version: u32,
    /// `P(|S| >= C_up · total) <= e^{-p}` is expected.
    pub c_up: f64,
    /// `P(|S| >= c_low · total) >= e^{-c_exp · p}` is expected.
    pub c_low: f64,
    pub c_exp: f64,
    /// `total(2p) <= K_growth · total(p)`.
    pub k_growth: f64,
    /// Extra factor allowed for `‖S‖_{2p} / ‖S‖_p` against `k_growth`.
    pub growth_margin: f64,
    /// Range of `‖S‖_p / total` seen in the training sweep.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Allowed range of undecoupled over decoupled moments.
    pub decoupling_window: (f64, f64),
    #[serde(default)]
    pub windows: Vec<RatioWindow>,
    #[serde(default)]
    pub notes: String,
}

/// Recorded `‖S‖_p / total` range for one (model, matrix family) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioWindow {
    pub model: String,
    pub family: String,
    pub min: f64,
    pub max: f64,
}

impl CalibrationPack {
    /// All constants 1: thresholds equal `total`.
    pub fn identity() -> Self {
        Self {
            version: 0,
            c_up: 1.0,
            c_low: 1.0,
            c_exp: 1.0,
            k_growth: 1.0,
            growth_margin: 1.0,
            ratio_min: 1.0,
            ratio_max: 1.0,
            decoupling_window: (1.0, 1.0),
            windows: Vec::new(),
            notes: String::new(),
        }
    }

    /// The pack shipped with the crate.
    pub fn frozen() -> Self {
        serde_json::from_str(include_str!("../calibration/pack_v1.json")).expect("bundled calibration pack parses")
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("pack serializes")
    }

    pub fn window(&self, model: &str, family: &str) -> Option<&RatioWindow> {
        self.windows.iter().find(|w| w.model == model && w.family == family)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailThreshold {
    /// `C_up · total`; exceeded with probability at most `upper_level`.
    pub threshold_up: f64,
    /// `c_low · total`; exceeded with probability at least `lower_level`.
    pub threshold_low: f64,
    pub upper_level: f64,
    pub lower_level: f64,
}

/// Tail thresholds from a report. The upper one follows from Chebyshev's
/// inequality `P(|S| >= e‖S‖_p) <= e^{-p}` once `C_up·total >= e‖S‖_p`; the
/// lower one is the Paley–Zygmund counterpart. Both are empirical claims
/// under the supplied pack.
pub fn tail_threshold(report: &BoundReport, calib: &CalibrationPack) -> TailThreshold {
    TailThreshold {
        threshold_up: calib.c_up * report.total,
        threshold_low: calib.c_low * report.total,
        upper_level: (-report.p).exp(),
        lower_level: (-calib.c_exp * report.p).exp(),
    }
}

/// `p·σ_max(A) + √p·‖A‖_F`.
pub fn gaussian_closed_form(a: &CoeffMatrix, p: f64) -> f64 {
    p * a.operator_norm() + p.sqrt() * a.frobenius()
}

/// Bilinear supremum over `{‖x‖₂² <= p, ‖x‖_∞ <= 1}²` plus
/// `Σ_{i<=p} A*_i + √p (Σ_{i>p} A*_i²)^{1/2}` of the row lengths.
pub fn rademacher_closed_form(a: &CoeffMatrix, p: f64) -> Result<f64> {
    Ok(rademacher_closed_report(a, p)?.total)
}

fn rademacher_closed_report(a: &CoeffMatrix, p: f64) -> Result<BoundReport> {
    check_p(p)?;
    check_chaos(a, "the Rademacher closed form")?;
    let o = L2BoxOracle { p, cap: 1.0 };
    let bil = bilinear_norm_with(a, &o, &o, &SolverConfig::default())?;
    let row = rademacher_f(&a.row_l2_norms(), p);
    Ok(BoundReport::closed(Form::Rademacher, p, bil.value, bil.upper, row, bil.method))
}

/// `p^{2/r} max|a_ij| + p^{1/r+1/2} max_i A_i + p σ_max(A) + √p ‖A‖_F`.
pub fn weibull_closed_form(a: &CoeffMatrix, r: f64, p: f64) -> Result<f64> {
    Ok(weibull_closed_report(a, r, p)?.total)
}

fn weibull_closed_report(a: &CoeffMatrix, r: f64, p: f64) -> Result<BoundReport> {
    check_p(p)?;
    check_chaos(a, "the Weibull closed form")?;
    check_shape(r)?;
    let amax_row = a.row_l2_norms().into_iter().fold(0.0, f64::max);
    let op = p.powf(2.0 / r) * a.max_abs() + p * a.operator_norm();
    let row = p.powf(1.0 / r + 0.5) * amax_row + p.sqrt() * a.frobenius();
    Ok(BoundReport::closed(Form::Weibull, p, op, op, row, Method::ClosedForm))
}

fn check_shape(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParameter(format!("shape r must be in (0, 1], got {r}")));
    }
    Ok(())
}

/// `|||A|||_{R,r,p}`: sum of the bilinear suprema over the box-capped
/// `(ℓ2, ℓ2)`, `(ℓr, ℓ2)` and `(ℓr, ℓr)` budget pairs. Returns the certified
/// lower value and the relaxation upper value.
pub fn triple_norm(a: &CoeffMatrix, r: f64, cutoff: f64, p: f64) -> Result<(f64, f64)> {
    let cfg = SolverConfig::default();
    let l2 = L2BoxOracle { p, cap: cutoff };
    let lr = LrBoxOracle { p, r, cap: cutoff };
    let s1 = bilinear_norm_with(a, &l2, &l2, &cfg)?;
    let s2 = bilinear_norm_with(a, &lr, &l2, &cfg)?;
    let s3 = bilinear_norm_with(a, &lr, &lr, &cfg)?;
    Ok((s1.value + s2.value + s3.value, s1.upper + s2.upper + s3.upper))
}

/// The three-regime formula for `W·1{|W| <= R}` variables, with regimes
/// `[1, R^r]`, `(R^r, R²]` and `(R², ∞)`.
pub fn truncweibull_closed_form(a: &CoeffMatrix, r: f64, cutoff: f64, p: f64) -> Result<f64> {
    Ok(truncweibull_closed_report(a, r, cutoff, p)?.total)
}

fn truncweibull_closed_report(a: &CoeffMatrix, r: f64, cutoff: f64, p: f64) -> Result<BoundReport> {
    check_p(p)?;
    check_chaos(a, "the truncated Weibull closed form")?;
    check_shape(r)?;
    if !(cutoff > 1.0) {
        return Err(Error::InvalidParameter(format!("cutoff R must exceed 1, got {cutoff}")));
    }
    let (tri, tri_upper) = triple_norm(a, r, cutoff, p)?;
    let rows = nonincreasing_rearrangement(&a.row_l2_norms());
    let head = |count: f64| -> f64 { rows.iter().take(count.floor() as usize).sum() };
    let rr = cutoff.powf(r);
    let rest = if p <= rr {
        p.sqrt() * a.frobenius() + p.powf(1.0 / r) * rows.first().copied().unwrap_or(0.0)
    } else if p <= cutoff * cutoff {
        p.sqrt() * a.frobenius() + cutoff * head(p / rr)
    } else {
        // i >= p/R² with 1-based i
        let from = ((p / (cutoff * cutoff)).ceil() as usize).max(1) - 1;
        let tail: f64 = rows.iter().skip(from).map(|v| v * v).sum();
        p.sqrt() * tail.sqrt() + cutoff * head(p / rr)
    };
    Ok(BoundReport::closed(Form::TruncWeibull, p, tri, tri_upper, rest, Method::Alternating))
}

/// Evaluates any form; closed forms read their parameters from `mx`.
pub fn bound_report(
    form: Form,
    a: &CoeffMatrix,
    mx: &DistributionModel,
    my: Option<&DistributionModel>,
    p: f64,
) -> Result<BoundReport> {
    match form {
        Form::Decoupled => decoupled_moment_bound(a, mx, my.unwrap_or(mx), p),
        Form::Undecoupled => undecoupled_moment_bound(a, mx, p),
        Form::Gaussian => {
            check_p(p)?;
            let op = p * a.operator_norm();
            Ok(BoundReport::closed(Form::Gaussian, p, op, op, p.sqrt() * a.frobenius(), Method::ClosedForm))
        }
        Form::Rademacher => rademacher_closed_report(a, p),
        Form::Weibull => match mx.kind() {
            Kind::WeibullSym { r } => weibull_closed_report(a, *r, p),
            _ => Err(Error::Unsupported("the Weibull form needs a WeibullSym model".into())),
        },
        Form::TruncWeibull => match mx.kind() {
            Kind::TruncWeibullSym { r, cutoff } => truncweibull_closed_report(a, *r, *cutoff, p),
            _ => Err(Error::Unsupported("the truncated Weibull form needs a TruncWeibullSym model".into())),
        },
    }
}

/// `inf { t > 0 : Σ_i ln E|1 + a_i X / t|^p <= p }` for a symmetric `X`.
pub fn latala_linear_moment(model: &DistributionModel, a: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let w: Vec<f64> = a.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    if w.is_empty() {
        return Ok(0.0);
    }
    let phi = |ln_t: f64| -> Result<f64> {
        let mut s = 0.0;
        for &wi in &w {
            s += log_expect_one_plus(model, wi / ln_t.exp(), p)?;
        }
        Ok(s)
    };
    // phi decreases in t from +∞ to 0
    let l2 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut lo = l2.ln();
    let mut hi = lo;
    while phi(lo)? <= p {
        lo -= 1.0;
    }
    while phi(hi)? > p {
        hi += 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid)? > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(hi.exp())
}

/// `ln E|1 + zX|^p = ln E h(z|X|)`, `h(s) = (|1+s|^p + |1-s|^p)/2`, which is
/// even, convex and so nondecreasing in `s >= 0`.
fn log_expect_one_plus(model: &DistributionModel, z: f64, p: f64) -> Result<f64> {
    let ln_hprime = move |s: f64| -> f64 {
        // h'(s) = p/2 ((1+s)^{p-1} - sgn(1-s)|1-s|^{p-1})
        let base = (0.5 * p).ln() + (p - 1.0) * s.ln_1p();
        if s < 1.0 {
            let q = (p - 1.0) * ((1.0 - s) / (1.0 + s)).ln();
            if q == 0.0 {
                return f64::NEG_INFINITY;
            }
            base + (-q.exp_m1()).ln()
        } else {
            let ratio = (s - 1.0) / (1.0 + s);
            let q = if ratio == 0.0 { f64::NEG_INFINITY } else { (p - 1.0) * ratio.ln() };
            base + q.exp().ln_1p()
        }
    };
    let kink = if z > 0.0 { vec![1.0 / z] } else { vec![] };
    model.log_expect_increasing(1.0, move |u, _| z.ln() + ln_hprime(z * u), &kink)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> CoeffMatrix {
        CoeffMatrix::chaos(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let z = CoeffMatrix::zeros(3, 3);
        let r =
            decoupled_moment_bound(&z, &DistributionModel::gaussian(), &DistributionModel::gaussian(), 2.0).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn square_tail_identity() {
        let st = DistributionModel::square_tail();
        let r = decoupled_moment_bound(&CoeffMatrix::identity(2), &st, &st, 4.0).unwrap();
        assert!((r.bilinear_term - 4.0).abs() < 1e-10);
        assert!((r.total - (4.0 + 4.0 * 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn rademacher_one_by_one() {
        let rad = DistributionModel::rademacher();
        let one = CoeffMatrix::dense(vec![vec![1.0]]).unwrap();
        let r = decoupled_moment_bound(&one, &rad, &rad, 1.0).unwrap();
        assert!((r.total - 3.0).abs() < 1e-9);
    }

    #[test]
    fn undecoupled_rejects_diagonal() {
        let a = CoeffMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]], true, false).unwrap();
        assert!(matches!(undecoupled_moment_bound(&a, &DistributionModel::rademacher(), 1.0), Err(Error::Flags(_))));
    }

    #[test]
    fn closed_form_examples() {
        assert!((gaussian_closed_form(&CoeffMatrix::identity(2), 4.0) - (4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-9);
        assert!((rademacher_closed_form(&two_by_two(), 1.0).unwrap() - 3.0).abs() < 1e-9);
        let w = weibull_closed_form(&two_by_two(), 1.0, 1.0).unwrap();
        assert!((w - (3.0 + 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn identity_pack_thresholds() {
        let mut r = BoundReport::closed(Form::Gaussian, 1.0, 3.0, 3.0, 0.0, Method::ClosedForm);
        r.total = 3.0;
        let t = tail_threshold(&r, &CalibrationPack::identity());
        assert_eq!((t.threshold_up, t.threshold_low), (3.0, 3.0));
        assert!((t.upper_level - (-1f64).exp()).abs() < 1e-15);
        assert!((t.lower_level - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn latala_rademacher_scalar() {
        let t = latala_linear_moment(&DistributionModel::rademacher(), &[1.0], 2.0).unwrap();
        let expect = 1.0 / (std::f64::consts::E.powi(2) - 1.0).sqrt();
        assert!((t - expect).abs() < 1e-8, "{t} vs {expect}");
        assert_eq!(latala_linear_moment(&DistributionModel::rademacher(), &[0.0, 0.0], 2.0).unwrap(), 0.0);
    }
}
